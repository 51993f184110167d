"""Room shapes built from rectangles (meters, counter-clockwise vertex order)."""
from __future__ import annotations

import math

import numpy as np

from roomcloud.errors import GeometryError
from roomcloud.geom import ArcSpec, as_polygon


def perp(v) -> np.ndarray:
    """90 degree anticlockwise rotation."""
    return np.array([-v[1], v[0]], dtype=np.float64)


def gen_rectangle(p, v, l: float, w: float) -> np.ndarray:
    """Corners P, P + v l, P + v l + v_perp w, P + v_perp w."""
    p = np.asarray(p, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if abs(np.hypot(v[0], v[1]) - 1.0) > 1e-9:
        raise GeometryError(f"alignment vector must be unit length, got {v}")
    if not (l > 0 and w > 0):
        raise GeometryError("rectangle sides must be positive")
    vp = perp(v)
    p2 = p + v * l
    p3 = p2 + vp * w
    p4 = p3 - v * l
    return np.stack([p, p2, p3, p4])


def shrink_rectangle(rect, amount: float) -> np.ndarray:
    """Move every side of a rectangle inward by ``amount``."""
    r = as_polygon(rect)
    out = np.empty_like(r)
    for i in range(4):
        a = r[(i - 1) % 4] - r[i]
        b = r[(i + 1) % 4] - r[i]
        out[i] = r[i] + amount * (a / np.linalg.norm(a) + b / np.linalg.norm(b))
    sides = np.linalg.norm(np.roll(r, -1, axis=0) - r, axis=1)
    if 2 * amount >= sides.min():
        raise GeometryError("shrink amount exceeds half the rectangle side")
    return out


def _neighbors(p, i):
    n = len(p)
    return p[(i - 1) % n], p[i], p[(i + 1) % n]


def morph_rectilinear(p, corner_idx: int, rng=None) -> np.ndarray:
    """Swap corner ``c`` for the midpoint of edge ``c -> c+1``, ... , the midpoint of
    edge ``c-1 -> c`` and the rectangle center, giving an L shape of 3/4 the area.

    The result starts at the first midpoint and keeps the CCW traversal.
    """
    p = as_polygon(p)
    n = len(p)
    prev, corner, nxt = _neighbors(p, corner_idx)
    center = p.mean(axis=0)
    rest = [p[(corner_idx + k) % n] for k in range(1, n)]
    return np.stack([0.5 * (corner + nxt), *rest, 0.5 * (corner + prev), center])


def morph_nonright(p, corner_idx: int, fracs=None, rng=None) -> np.ndarray:
    """Cut corner ``c`` off with a straight edge.

    The new points sit at fraction ``f1`` along edge ``c -> c+1`` and ``f2``
    along edge ``c -> c-1``, both measured from the removed corner.  Fractions
    default to uniform draws in [0.25, 0.75].
    """
    p = as_polygon(p)
    n = len(p)
    if fracs is None:
        rng = rng if rng is not None else np.random.default_rng()
        fracs = rng.uniform(0.25, 0.75, size=2)
    f1, f2 = (float(f) for f in fracs)
    if not (0.0 < f1 < 1.0 and 0.0 < f2 < 1.0):
        raise GeometryError("cut fractions must lie strictly between 0 and 1")
    prev, corner, nxt = _neighbors(p, corner_idx)
    rest = [p[(corner_idx + k) % n] for k in range(1, n)]
    return np.stack([corner + f1 * (nxt - corner), *rest, corner + f2 * (prev - corner)])


def _angle(d) -> float:
    return math.atan2(float(d[1]), float(d[0]))


def morph_halfcircle(p, edge_idx: int):
    """Bow edge ``i -> i+1`` outward into a half circle on the edge midpoint.

    The chord polygon is returned unchanged along with the arc; the arc runs
    counter-clockwise from vertex ``i`` to vertex ``i+1``.
    """
    p = as_polygon(p)
    n = len(p)
    a, b = p[edge_idx % n], p[(edge_idx + 1) % n]
    center = 0.5 * (a + b)
    r = 0.5 * float(np.linalg.norm(b - a))
    start = _angle(a - center)
    arc = ArcSpec(center=(float(center[0]), float(center[1])), radius=r,
                  start_angle=start, end_angle=start + math.pi)
    return p.copy(), arc


def morph_quartercircle(p, corner_idx: int):
    """Round corner ``c`` with a quarter circle of radius half the shorter incident edge.

    Returns the chord polygon (corner replaced by the two tangent points) and
    the arc, which curves toward the removed corner.
    """
    p = as_polygon(p)
    n = len(p)
    prev, corner, nxt = _neighbors(p, corner_idx)
    u_next = nxt - corner
    u_prev = prev - corner
    r = 0.5 * min(np.linalg.norm(u_next), np.linalg.norm(u_prev))
    u_next = u_next / np.linalg.norm(u_next)
    u_prev = u_prev / np.linalg.norm(u_prev)
    t_prev = corner + r * u_prev
    t_next = corner + r * u_next
    center = corner + r * (u_prev + u_next)
    start = _angle(t_prev - center)
    end = _angle(t_next - center)
    while end <= start:
        end += 2 * math.pi
    arc = ArcSpec(center=(float(center[0]), float(center[1])), radius=float(r),
                  start_angle=start, end_angle=end)
    rest = [p[(corner_idx + k) % n] for k in range(1, n)]
    return np.stack([t_next, *rest, t_prev]), arc
