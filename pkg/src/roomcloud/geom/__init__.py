from roomcloud.geom.contour import contour_extract, trace_components
from roomcloud.geom.mesh import TriMesh, sample_mesh
from roomcloud.geom.polygon import (
    ARC_SEGMENTS,
    ArcSpec,
    as_polygon,
    densify_arcs,
    ensure_ccw,
    is_simple,
    lowest_leftmost_index,
    polygon_area,
    polygon_iou,
    region_area,
    resample_boundary,
    roll_to_start,
)
from roomcloud.geom.raster import (
    FILLED,
    OUTLINE,
    bresenham,
    empty_mask,
    mask_iou,
    outline_pixels,
    points_in_polygon,
    rasterize_polygon,
)

__all__ = [
    "ARC_SEGMENTS", "ArcSpec", "FILLED", "OUTLINE", "TriMesh", "as_polygon", "bresenham",
    "contour_extract", "densify_arcs", "empty_mask", "ensure_ccw", "is_simple",
    "lowest_leftmost_index", "mask_iou", "outline_pixels", "points_in_polygon",
    "polygon_area", "polygon_iou", "rasterize_polygon", "region_area",
    "resample_boundary", "roll_to_start", "sample_mesh", "trace_components",
]
