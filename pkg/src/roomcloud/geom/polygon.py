"""Polygons as ``(n, 2)`` float arrays, closed implicitly (last vertex joins the first).

Curved rooms are carried as a chord polygon plus a list of :class:`ArcSpec`;
each arc replaces one polygon edge whose endpoints coincide with the arc's
endpoints.  :func:`densify_arcs` turns that pair into a plain polygon.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon as _ShapelyPolygon

from roomcloud.errors import DegeneratePolygonError, InvalidPolygonError

ARC_SEGMENTS = 16


def as_polygon(p) -> np.ndarray:
    """Validate and return ``p`` as a float64 ``(n, 2)`` array."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidPolygonError(f"polygon must have shape (n, 2), got {arr.shape}")
    if arr.shape[0] < 3:
        raise InvalidPolygonError(f"polygon needs at least 3 vertices, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidPolygonError("polygon has non-finite coordinates")
    return arr


def polygon_area(p) -> float:
    """Signed shoelace area; positive iff the vertices run counter-clockwise."""
    p = as_polygon(p)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def ensure_ccw(p) -> np.ndarray:
    p = as_polygon(p)
    area = polygon_area(p)
    if area == 0.0:
        raise DegeneratePolygonError("cannot orient a zero-area polygon")
    if area < 0:
        return p[::-1].copy()
    return p.copy()


def _to_shapely(p) -> _ShapelyPolygon:
    p = as_polygon(p)
    poly = _ShapelyPolygon(p)
    if poly.area <= 0.0:
        raise DegeneratePolygonError("polygon has zero area")
    if not poly.is_valid:
        raise InvalidPolygonError(f"polygon is not simple: {shapely.is_valid_reason(poly)}")
    return poly


def polygon_iou(a, b) -> float:
    """Intersection area over union area of two simple polygons."""
    pa, pb = _to_shapely(a), _to_shapely(b)
    inter = pa.intersection(pb).area
    union = pa.area + pb.area - inter
    return float(min(1.0, max(0.0, inter / union)))


def is_simple(p) -> bool:
    try:
        _to_shapely(p)
    except (InvalidPolygonError, DegeneratePolygonError):
        return False
    return True


def lowest_leftmost_index(p) -> int:
    """Index of the vertex with minimum y, ties broken by minimum x."""
    p = as_polygon(p)
    return int(np.lexsort((p[:, 0], p[:, 1]))[0])


def roll_to_start(p, start: int) -> np.ndarray:
    return np.roll(as_polygon(p), -int(start), axis=0)


@dataclass(frozen=True)
class ArcSpec:
    """Circular arc swept counter-clockwise from ``start_angle`` to ``end_angle``."""

    center: tuple[float, float]
    radius: float
    start_angle: float
    end_angle: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidPolygonError(f"arc radius must be positive, got {self.radius}")
        if not self.end_angle > self.start_angle:
            raise InvalidPolygonError("arc end_angle must exceed start_angle")

    @property
    def sweep(self) -> float:
        return self.end_angle - self.start_angle

    def point_at(self, angle) -> np.ndarray:
        cx, cy = self.center
        angle = np.asarray(angle, dtype=np.float64)
        return np.stack([cx + self.radius * np.cos(angle), cy + self.radius * np.sin(angle)], axis=-1)

    @property
    def start_point(self) -> np.ndarray:
        return self.point_at(self.start_angle)

    @property
    def end_point(self) -> np.ndarray:
        return self.point_at(self.end_angle)

    def segment_area(self) -> float:
        """Area between the arc and its chord."""
        t = self.sweep
        return 0.5 * self.radius**2 * (t - np.sin(t))

    def interior_points(self, segments: int = ARC_SEGMENTS) -> np.ndarray:
        """The ``segments - 1`` points strictly between the arc endpoints."""
        t = self.start_angle + self.sweep * np.arange(1, segments) / segments
        return self.point_at(t)


def _find_arc_edge(p: np.ndarray, arc: ArcSpec, tol: float) -> tuple[int, bool]:
    a, b = arc.start_point, arc.end_point
    n = len(p)
    for i in range(n):
        u, w = p[i], p[(i + 1) % n]
        if np.allclose(u, a, atol=tol) and np.allclose(w, b, atol=tol):
            return i, True
        if np.allclose(u, b, atol=tol) and np.allclose(w, a, atol=tol):
            return i, False
    raise InvalidPolygonError("arc endpoints do not match any polygon edge")


def densify_arcs(p, arcs: Sequence[ArcSpec] = (), segments: int = ARC_SEGMENTS,
                 tol: float = 1e-7) -> np.ndarray:
    """Replace each arc's chord edge with ``segments`` straight pieces along the arc."""
    p = as_polygon(p)
    if not arcs:
        return p.copy()
    if segments < 1:
        raise ValueError("segments must be positive")
    inserts = {}
    for arc in arcs:
        i, forward = _find_arc_edge(p, arc, tol)
        pts = arc.interior_points(segments)
        inserts[i] = pts if forward else pts[::-1]
    out = []
    for i in range(len(p)):
        out.append(p[i:i + 1])
        if i in inserts:
            out.append(inserts[i])
    return np.concatenate(out, axis=0)


def region_area(p, arcs: Sequence[ArcSpec] = (), tol: float = 1e-7) -> float:
    """Exact signed area of the region bounded by ``p`` with its chords bowed into arcs."""
    p = as_polygon(p)
    area = polygon_area(p)
    for arc in arcs:
        _, forward = _find_arc_edge(p, arc, tol)
        area += arc.segment_area() if forward else -arc.segment_area()
    return area


def _visvalingam(p: np.ndarray, b: int) -> np.ndarray:
    keep = list(range(len(p)))
    while len(keep) > b:
        m = len(keep)
        best, best_area = 0, np.inf
        for k in range(m):
            a, o, c = p[keep[k - 1]], p[keep[k]], p[keep[(k + 1) % m]]
            tri = abs((o[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (o[1] - a[1]))
            if tri < best_area:
                best, best_area = k, tri
        keep.pop(best)
    return p[keep].copy()


def resample_boundary(p, b: int) -> np.ndarray:
    """Return a polygon with exactly ``b`` vertices tracing the same boundary.

    With ``b`` at least the vertex count, every original vertex is kept and the
    extra points split the longest edges into equal pieces (the edge whose
    current piece length is largest receives the next point).  With fewer
    target points, vertices are dropped smallest-triangle-first so corners
    survive and arcs are thinned evenly.
    """
    p = as_polygon(p)
    if b < 3:
        raise InvalidPolygonError(f"need at least 3 border points, got {b}")
    n = len(p)
    if b == n:
        return p.copy()
    if b < n:
        return _visvalingam(p, b)
    lengths = np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)
    pieces = np.ones(n, dtype=int)
    for _ in range(b - n):
        pieces[int(np.argmax(lengths / pieces))] += 1
    out = []
    for i in range(n):
        u, w = p[i], p[(i + 1) % n]
        t = np.arange(pieces[i])[:, None] / pieces[i]
        out.append(u + t * (w - u))
    return np.concatenate(out, axis=0)
