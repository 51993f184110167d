"""Multi-room scene placement and rendering onto the wall canvas.

Rooms live in meters.  Rendering maps them uniformly into the canvas with a
fixed pixel margin, y flipped so row 0 is the north edge (the same north-up
convention as the wall histogram).  In that raster frame a pixel ``(r, c)``
covers ``[c, c+1) x [r, r+1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import Polygon as _ShapelyPolygon

from roomcloud.geom import ArcSpec, FILLED, densify_arcs, lowest_leftmost_index, rasterize_polygon
from roomcloud.synthgen.config import SHAPE_FAMILIES, GenConfig
from roomcloud.synthgen.shapes import (
    gen_rectangle,
    morph_halfcircle,
    morph_nonright,
    morph_quartercircle,
    morph_rectilinear,
    shrink_rectangle,
)

_NEIGHBORS = np.array([(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)])


@dataclass(frozen=True)
class Room:
    polygon: np.ndarray            # chord polygon in meters, CCW
    tag: str                       # one of SHAPE_FAMILIES
    arcs: tuple = ()               # ArcSpec per bowed edge

    def dense(self) -> np.ndarray:
        return densify_arcs(self.polygon, self.arcs)


@dataclass(frozen=True)
class Scene:
    rooms: tuple
    canvas: int = 128
    margin: int = 4

    def transform(self):
        """``(origin, scale)`` mapping meters onto the canvas, see :meth:`to_raster`."""
        pts = np.concatenate([r.dense() for r in self.rooms])
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        side = float(np.max(hi - lo))
        scale = (self.canvas - 2 * self.margin) / side
        # center the shorter axis
        origin = 0.5 * (lo + hi) - 0.5 * side
        return origin, scale

    def to_raster(self, pts) -> np.ndarray:
        """Meters -> raster frame ``(x=col, y=row)`` with north up."""
        origin, s = self.transform()
        pts = np.asarray(pts, dtype=np.float64)
        x = self.margin + (pts[:, 0] - origin[0]) * s
        y = self.canvas - self.margin - (pts[:, 1] - origin[1]) * s
        return np.stack([x, y], axis=1)

    def to_points_frame(self, pts) -> np.ndarray:
        """Meters -> the frame of ``pixels_to_points`` (pixel center of (r, c) is (c, d-1-r))."""
        q = self.to_raster(pts)
        return np.stack([q[:, 0] - 0.5, self.canvas - 0.5 - q[:, 1]], axis=1)


def _shapely(poly) -> _ShapelyPolygon:
    return _ShapelyPolygon(poly)


def place_rooms(cfg: GenConfig, rng) -> list[np.ndarray]:
    """Corner-anchored, non-overlapping rectangles, each shrunk by ``cfg.shrink``.

    The scene gets a random orientation; every room is that orientation turned
    by a random multiple of 90 degrees, so rooms stay mutually axis-aligned.
    A room that still overlaps after ``cfg.place_attempts`` draws ends placement.
    """
    lo, hi = cfg.edge_len_range
    k = int(rng.integers(1, cfg.max_rooms + 1))
    phi = rng.uniform(0.0, 2 * math.pi)
    base = np.array([math.cos(phi), math.sin(phi)])
    turns = [base, np.array([-base[1], base[0]]), -base, np.array([base[1], -base[0]])]
    rects = [gen_rectangle((0.0, 0.0), base, rng.uniform(lo, hi), rng.uniform(lo, hi))]
    shapes = [_shapely(rects[0])]
    while len(rects) < k:
        placed = False
        for _ in range(cfg.place_attempts):
            corners = np.concatenate(rects)
            anchor = corners[rng.integers(len(corners))]
            v = turns[int(rng.integers(4))]
            cand = gen_rectangle(anchor, v, rng.uniform(lo, hi), rng.uniform(lo, hi))
            sc = _shapely(cand)
            if all(sc.intersection(s).area <= 1e-9 * sc.area for s in shapes):
                rects.append(cand)
                shapes.append(sc)
                placed = True
                break
        if not placed:
            break
    return [shrink_rectangle(r, cfg.shrink) for r in rects]


def _morph(rect, family, others, cfg, rng) -> Room:
    if family == "rectangular":
        return Room(rect.copy(), family)
    if family == "rectilinear":
        return Room(morph_rectilinear(rect, int(rng.integers(4))), family)
    if family == "nonright":
        c = int(rng.integers(4))
        poly = morph_nonright(rect, c, rng.uniform(0.25, 0.75, size=2))
        if rng.random() < 0.5:
            # a second corner of the original rectangle; corner c+k sits at index k now
            k = int(rng.integers(1, 4))
            poly = morph_nonright(poly, k, rng.uniform(0.25, 0.75, size=2))
        return Room(poly, family)
    # curved: half circle outward when it clears the other rooms, else quarter circle
    if rng.random() < 0.5:
        edges = rng.permutation(4)
        for e in edges:
            poly, arc = morph_halfcircle(rect, int(e))
            region = _shapely(densify_arcs(poly, [arc]))
            gap = 2 * cfg.shrink - 1e-9
            if all(region.distance(o) >= gap for o in others):
                return Room(poly, family, (arc,))
    poly, arc = morph_quartercircle(rect, int(rng.integers(4)))
    return Room(poly, family, (arc,))


def _room_key(room: Room):
    d = room.dense()
    return (float(d[:, 1].min()), float(d[:, 0].min()))


def generate_scene(cfg: GenConfig, rng) -> Scene:
    """Place rectangles, morph each into a family drawn from ``cfg.shape_weights``,
    and order rooms by bounding box ``(min y, min x)``."""
    rects = place_rooms(cfg, rng)
    families = rng.choice(len(SHAPE_FAMILIES), size=len(rects), p=cfg.family_probs)
    rooms = []
    for i, (rect, fam) in enumerate(zip(rects, families)):
        others = [_shapely(r.dense()) for r in rooms] + [_shapely(r) for r in rects[i + 1:]]
        rooms.append(_morph(rect, SHAPE_FAMILIES[int(fam)], others, cfg, rng))
    rooms.sort(key=_room_key)
    return Scene(rooms=tuple(rooms), canvas=cfg.canvas, margin=cfg.margin)


@dataclass
class Rendered:
    wall_image: np.ndarray     # (canvas, canvas) bool, after jitter and dropout
    owners: np.ndarray         # (canvas, canvas) int, room index per wall pixel, -1 elsewhere
    room_masks: list = field(default_factory=list)   # filled, noise-free
    outlines: list = field(default_factory=list)     # per-room outline masks, noise-free


def render_scene(scene: Scene, cfg: GenConfig, rng) -> Rendered:
    """Outline union with per-pixel jitter and dropout, plus one filled mask per room.

    A jittered pixel moves to a uniform 8-neighbor (clamped to the canvas).
    Where pixels of several rooms coincide, the lowest room index owns it.
    """
    n = scene.canvas
    owners = np.full((n, n), -1, dtype=np.int64)
    outlines, masks = [], []
    for k, room in enumerate(scene.rooms):
        dense_px = scene.to_raster(room.dense())
        out = rasterize_polygon(dense_px, n, n, "outline")
        outlines.append(out)
        masks.append(rasterize_polygon(dense_px, n, n, FILLED))
        owners[out & (owners < 0)] = k
    rows, cols = np.nonzero(owners >= 0)
    own = owners[rows, cols]
    move = rng.random(len(rows)) < cfg.jitter_prob
    step = _NEIGHBORS[rng.integers(8, size=len(rows))]
    rows = np.where(move, np.clip(rows + step[:, 0], 0, n - 1), rows)
    cols = np.where(move, np.clip(cols + step[:, 1], 0, n - 1), cols)
    jittered = np.full((n, n), np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(jittered, (rows, cols), own)
    wall = jittered != np.iinfo(np.int64).max
    r2, c2 = np.nonzero(wall)
    drop = rng.random(len(r2)) < cfg.dropout_prob
    wall[r2[drop], c2[drop]] = False
    final_owners = np.where(wall, jittered, -1)
    return Rendered(wall_image=wall, owners=final_owners, room_masks=masks, outlines=outlines)


def start_vertex(poly) -> np.ndarray:
    return np.asarray(poly)[lowest_leftmost_index(poly)]
