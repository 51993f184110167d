"""Outer-boundary extraction from binary masks by Moore neighbour tracing."""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from roomcloud.geom.polygon import polygon_area

# Moore neighbourhood as (drow, dcol), clockwise on screen starting west.
_MOORE = [(0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1)]
_EIGHT = np.ones((3, 3), dtype=int)


def _trace(fg: np.ndarray, start: tuple[int, int]) -> list[tuple[int, int]]:
    # fg is padded by one background pixel on every side
    loop = [start]
    cur = start
    back = (start[0], start[1] - 1)  # west of the raster-first pixel is background
    first_move = None
    for _ in range(4 * fg.size + 8):
        d0 = _MOORE.index((back[0] - cur[0], back[1] - cur[1]))
        prev, nxt = back, None
        for k in range(1, 8):
            dr, dc = _MOORE[(d0 + k) % 8]
            cand = (cur[0] + dr, cur[1] + dc)
            if fg[cand]:
                nxt = cand
                break
            prev = cand
        if nxt is None:
            return loop  # isolated pixel
        move = (nxt, prev)
        if first_move is None:
            first_move = move
        elif move == first_move:
            loop.pop()  # start pixel was appended again on re-entry
            return loop
        loop.append(nxt)
        cur, back = nxt, prev
    raise RuntimeError("Moore tracing did not terminate")


def trace_components(mask) -> list[np.ndarray]:
    """Boundary pixel loops ``(k, 2)`` as ``(row, col)``, one per 8-connected component."""
    mask = np.asarray(mask, dtype=bool)
    labels, n = ndimage.label(mask, structure=_EIGHT)
    padded = np.pad(labels, 1)
    loops = []
    for lab in range(1, n + 1):
        fg = padded == lab
        flat = int(np.flatnonzero(fg)[0])
        start = divmod(flat, fg.shape[1])
        loop = _trace(fg, start)
        loops.append(np.array(loop, dtype=np.int64) - 1)
    return loops


def contour_extract(mask) -> list[np.ndarray]:
    """Counter-clockwise boundary polygons through pixel centers, one per component.

    Vertices are raster coordinates ``(col + 0.5, row + 0.5)``.  Components
    whose boundary encloses no area (single pixels, one-pixel lines) are
    skipped because they do not form a polygon.
    """
    out = []
    for loop in trace_components(mask):
        if len(loop) < 3:
            continue
        poly = np.stack([loop[:, 1] + 0.5, loop[:, 0] + 0.5], axis=1).astype(np.float64)
        area = polygon_area(poly)
        if area == 0.0:
            continue
        out.append(poly if area > 0 else poly[::-1].copy())
    return out
