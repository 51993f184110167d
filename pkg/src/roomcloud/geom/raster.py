"""Binary masks and polygon rasterization.

Masks are boolean arrays of shape ``(height, width)`` indexed ``[row, col]``.
Pixel ``(r, c)`` covers ``[c, c+1) x [r, r+1)`` in raster coordinates
(x to the right, y down the rows), so its center is ``(c + 0.5, r + 0.5)``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from roomcloud.errors import GeometryError, OutOfBoundsError
from roomcloud.geom.polygon import ARC_SEGMENTS, ArcSpec, as_polygon, densify_arcs

OUTLINE = "outline"
FILLED = "filled"


def empty_mask(width: int, height: int) -> np.ndarray:
    if width <= 0 or height <= 0:
        raise GeometryError(f"mask dimensions must be positive, got {width}x{height}")
    return np.zeros((height, width), dtype=bool)


def mask_iou(a, b) -> float:
    """Set-bit IoU; two empty masks count as identical (1.0)."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise GeometryError(f"mask dimensions differ: {a.shape} vs {b.shape}")
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def bresenham(c0: int, r0: int, c1: int, r1: int) -> np.ndarray:
    """Integer pixels on the 8-connected line from ``(c0, r0)`` to ``(c1, r1)``, inclusive."""
    dc, dr = abs(c1 - c0), -abs(r1 - r0)
    sc = 1 if c0 < c1 else -1
    sr = 1 if r0 < r1 else -1
    err = dc + dr
    out = []
    c, r = c0, r0
    while True:
        out.append((c, r))
        if c == c1 and r == r1:
            break
        e2 = 2 * err
        if e2 >= dr:
            err += dr
            c += sc
        if e2 <= dc:
            err += dc
            r += sr
    return np.array(out, dtype=np.int64)


def _pixel_of(pts: np.ndarray, width: int, height: int) -> np.ndarray:
    cols = np.minimum(np.floor(pts[:, 0]).astype(np.int64), width - 1)
    rows = np.minimum(np.floor(pts[:, 1]).astype(np.int64), height - 1)
    return np.stack([cols, rows], axis=1)


def outline_pixels(p, width: int, height: int) -> np.ndarray:
    """``(k, 2)`` array of unique ``(row, col)`` pixels on the polygon boundary."""
    p = as_polygon(p)
    pix = _pixel_of(p, width, height)
    segs = [bresenham(*pix[i], *pix[(i + 1) % len(pix)]) for i in range(len(pix))]
    cr = np.unique(np.concatenate(segs, axis=0), axis=0)
    return np.stack([cr[:, 1], cr[:, 0]], axis=1)


def points_in_polygon(pts, p, tol: float = 1e-9, chunk: int = 32768) -> np.ndarray:
    """Crossing-number containment; points within ``tol`` of an edge count as inside."""
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    p = as_polygon(p)
    if len(pts) > chunk:
        return np.concatenate([points_in_polygon(pts[i:i + chunk], p, tol, chunk)
                               for i in range(0, len(pts), chunk)])
    x, y = pts[:, 0:1], pts[:, 1:2]
    ax, ay = p[:, 0][None, :], p[:, 1][None, :]
    q = np.roll(p, -1, axis=0)
    bx, by = q[:, 0][None, :], q[:, 1][None, :]
    crosses = (ay > y) != (by > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = ax + (y - ay) * (bx - ax) / (by - ay)
    inside = np.count_nonzero(crosses & (x < xint), axis=1) % 2 == 1
    ex, ey = bx - ax, by - ay
    seg2 = ex * ex + ey * ey
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.clip(((x - ax) * ex + (y - ay) * ey) / seg2, 0.0, 1.0)
    t = np.where(seg2 > 0, t, 0.0)
    dx, dy = ax + t * ex - x, ay + t * ey - y
    on_edge = np.any(dx * dx + dy * dy <= tol * tol, axis=1)
    return inside | on_edge


def rasterize_polygon(p, width: int, height: int, mode: str = OUTLINE,
                      arcs: Sequence[ArcSpec] = (), segments: int = ARC_SEGMENTS) -> np.ndarray:
    """Draw ``p`` onto a ``width x height`` mask.

    ``outline`` sets the 8-connected line pixels between consecutive vertices
    (each vertex lands in the pixel containing it).  ``filled`` sets every
    pixel whose center is inside or on the boundary.
    """
    if mode not in (OUTLINE, FILLED):
        raise ValueError(f"unknown rasterization mode {mode!r}")
    mask = empty_mask(width, height)
    p = densify_arcs(p, arcs, segments)
    if (p[:, 0].min() < 0 or p[:, 1].min() < 0 or p[:, 0].max() > width
            or p[:, 1].max() > height):
        raise OutOfBoundsError(f"polygon exceeds the {width}x{height} canvas")
    if mode == OUTLINE:
        rc = outline_pixels(p, width, height)
        mask[rc[:, 0], rc[:, 1]] = True
        return mask
    c0 = max(int(np.floor(p[:, 0].min() - 0.5)), 0)
    c1 = min(int(np.ceil(p[:, 0].max())), width - 1)
    r0 = max(int(np.floor(p[:, 1].min() - 0.5)), 0)
    r1 = min(int(np.ceil(p[:, 1].max())), height - 1)
    rr, cc = np.mgrid[r0:r1 + 1, c0:c1 + 1]
    centers = np.stack([cc.ravel() + 0.5, rr.ravel() + 0.5], axis=1)
    inside = points_in_polygon(centers, p)
    mask[rr.ravel()[inside], cc.ravel()[inside]] = True
    return mask
