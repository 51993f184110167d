"""Turn a rendered scene into a pointer-network training pair."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import Polygon as _ShapelyPolygon

from roomcloud.errors import GeometryError, NoWallsError, SampleRejected
from roomcloud.geom import ensure_ccw, lowest_leftmost_index, resample_boundary, roll_to_start
from roomcloud.synthgen.config import ORDERINGS, GenConfig
from roomcloud.synthgen.scene import Rendered, Scene, render_scene
from roomcloud.walls import Normalization, pixels_to_points, subsample_indices


def pseudo_sort(points) -> np.ndarray:
    """Nearest-neighbor chain from the first point; returns the visiting order.

    Each step takes the unvisited point closest to the last one taken, ties
    going to the earliest input position.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    if n == 0:
        raise ValueError("cannot sort an empty point list")
    order = np.empty(n, dtype=np.int64)
    taken = np.zeros(n, dtype=bool)
    cur = 0
    for k in range(n):
        order[k] = cur
        taken[cur] = True
        if k == n - 1:
            break
        d = pts - pts[cur]
        dist = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]
        dist[taken] = np.inf
        cur = int(np.argmin(dist))
    return order


def true_sort(points, owners, centers, start_points) -> np.ndarray:
    """Order points room by room, each room anticlockwise about its center.

    Angles are measured from the direction of the room's start vertex, so the
    room's sequence begins next to where its border labels begin.
    """
    pts = np.asarray(points, dtype=np.float64)
    owners = None if owners is None else np.asarray(owners)
    if owners is None or len(owners) != len(pts) or np.any(owners < 0) \
            or np.any(owners >= len(centers)):
        raise GeometryError("true sort needs a known room for every point")
    centers = np.asarray(centers, dtype=np.float64)
    starts = np.asarray(start_points, dtype=np.float64)
    d = pts - centers[owners]
    ref = starts[owners] - centers[owners]
    ang = np.arctan2(d[:, 1], d[:, 0]) - np.arctan2(ref[:, 1], ref[:, 0])
    ang = np.mod(ang, 2 * np.pi)
    return np.lexsort((np.arange(len(pts)), ang, owners))


def snap_to_points(targets, points, allowed=None) -> np.ndarray:
    """Index of the nearest point for each target (lowest index on ties).

    ``allowed`` optionally restricts the candidates; it is ignored when it
    selects nothing.
    """
    t = np.asarray(targets, dtype=np.float64)
    p = np.asarray(points, dtype=np.float64)
    d = ((t[:, None, :] - p[None, :, :]) ** 2).sum(axis=2)
    if allowed is not None and np.any(allowed):
        d[:, ~np.asarray(allowed, dtype=bool)] = np.inf
    return np.argmin(d, axis=1)


def room_border(poly, b: int) -> np.ndarray:
    """``b`` CCW border points starting at the lowest-then-leftmost one."""
    q = resample_boundary(ensure_ccw(poly), b)
    return roll_to_start(q, lowest_leftmost_index(q))


@dataclass
class LayoutSample:
    points: np.ndarray             # (n, 2) ordered input sequence in [-1, 1]
    labels: np.ndarray             # (b * K,) indices into points
    ordering: str
    shape_tags: list
    rooms: list                    # ground-truth room outlines, same normalized frame
    b: int = 10
    owners: np.ndarray | None = None      # room of each input point
    room_masks: list = field(default_factory=list)
    wall_image: np.ndarray | None = None
    normalization: Normalization | None = None

    @property
    def k_rooms(self) -> int:
        return len(self.rooms)


def make_ptrnet_sample(scene: Scene, cfg: GenConfig, ordering: str, rng,
                       rendered: Rendered | None = None) -> LayoutSample:
    """Walls -> points -> normalize -> subsample -> order, with snapped border labels.

    Raises :class:`SampleRejected` when noise leaves no wall pixels.
    """
    if ordering not in ORDERINGS:
        raise ValueError(f"unknown ordering {ordering!r}")
    if rendered is None:
        rendered = render_scene(scene, cfg, rng)
    wall = rendered.wall_image
    if not wall.any():
        raise SampleRejected("wall image is empty after noise")
    try:
        all_pts = pixels_to_points(wall)
        norm = Normalization.fit(all_pts)
    except (NoWallsError, GeometryError) as exc:
        raise SampleRejected(str(exc)) from exc
    rows, cols = np.nonzero(wall)
    all_owners = rendered.owners[rows, cols]
    idx = subsample_indices(len(all_pts), cfg.p_n, rng)
    pts = np.clip(norm.apply(all_pts[idx]), -1.0, 1.0)
    owners = all_owners[idx]

    rooms = [norm.apply(scene.to_points_frame(r.dense())) for r in scene.rooms]
    borders = [room_border(r, cfg.b) for r in rooms]
    # prefer the room's own wall points so a border never snaps across a shared wall
    labels = np.concatenate([snap_to_points(bd, pts, owners == k) for k, bd in enumerate(borders)])

    if ordering == "pseudosort":
        order = pseudo_sort(pts)
    elif ordering == "truesort":
        centers = [np.array(_ShapelyPolygon(r).centroid.coords[0]) for r in rooms]
        order = true_sort(pts, owners, centers, [bd[0] for bd in borders])
    else:
        order = np.arange(len(pts))
    inv = np.empty_like(order)
    inv[order] = np.arange(len(order))
    return LayoutSample(
        points=pts[order], labels=inv[labels], ordering=ordering,
        shape_tags=[r.tag for r in scene.rooms], rooms=rooms, b=cfg.b,
        owners=owners[order], room_masks=rendered.room_masks, wall_image=wall,
        normalization=norm,
    )
