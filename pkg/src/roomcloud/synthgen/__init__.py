from roomcloud.synthgen.config import ORDERINGS, SHAPE_FAMILIES, GenConfig
from roomcloud.synthgen.dataset import (
    FORMAT_VERSION,
    DatasetRecord,
    build_sample,
    generate_dataset,
    iter_dataset,
    load_dataset,
    read_header,
    sample_rng,
)
from roomcloud.synthgen.sample import (
    LayoutSample,
    make_ptrnet_sample,
    pseudo_sort,
    room_border,
    snap_to_points,
    true_sort,
)
from roomcloud.synthgen.scene import Rendered, Room, Scene, generate_scene, place_rooms, render_scene
from roomcloud.synthgen.shapes import (
    gen_rectangle,
    morph_halfcircle,
    morph_nonright,
    morph_quartercircle,
    morph_rectilinear,
    shrink_rectangle,
)

__all__ = [
    "FORMAT_VERSION", "ORDERINGS", "SHAPE_FAMILIES", "DatasetRecord", "GenConfig",
    "LayoutSample", "Rendered", "Room", "Scene", "build_sample", "gen_rectangle",
    "generate_dataset", "generate_scene", "iter_dataset", "load_dataset", "make_ptrnet_sample",
    "morph_halfcircle", "morph_nonright", "morph_quartercircle", "morph_rectilinear",
    "place_rooms", "pseudo_sort", "read_header", "render_scene", "room_border",
    "sample_rng", "shrink_rectangle", "snap_to_points", "true_sort",
]
