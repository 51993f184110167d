"""Top-down wall evidence from point clouds.

Points are projected onto the floor and counted in a square ``d x d``
histogram.  Bins holding at least a quarter of the fullest bin's count are
walls.  Images are stored north-up: row 0 is the largest-y strip of bins, so
``pixels_to_points`` maps ``(row, col)`` back to ``(col, d - 1 - row)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from roomcloud.errors import GeometryError, NoWallsError

DEFAULT_BINS = 128
DEFAULT_THRESHOLD_RATIO = 0.25


@dataclass(frozen=True)
class WallGrid:
    counts: np.ndarray                           # (d, d) int64, row 0 = max y
    extent: tuple[float, float, float, float]    # min_x, min_y, max_x, max_y (meters)

    @property
    def d(self) -> int:
        return self.counts.shape[0]

    @property
    def bin_size(self) -> float:
        return (self.extent[2] - self.extent[0]) / self.d


@dataclass(frozen=True)
class WallImage:
    bits: np.ndarray     # (d, d) bool
    threshold: int
    n_max: int

    @property
    def d(self) -> int:
        return self.bits.shape[0]


def square_extent(xy: np.ndarray, bin_size: float | None = None):
    """Square ``(min_x, min_y, max_x, max_y)`` centered on the data, plus the bin count
    implied by ``bin_size`` (``None`` when no bin size is given)."""
    d = None
    lo = xy.min(axis=0)
    hi = xy.max(axis=0)
    center = 0.5 * (lo + hi)
    side = float(np.max(hi - lo))
    if bin_size is not None:
        d = max(2, int(math.ceil(side / bin_size)) if side > 0 else 2)
        side = d * bin_size
    elif side == 0.0:
        side = 1.0
    half = 0.5 * side
    extent = (float(center[0] - half), float(center[1] - half),
              float(center[0] + half), float(center[1] + half))
    return extent, d


def project_histogram(cloud, d: int = DEFAULT_BINS, bin_size: float | None = None) -> WallGrid:
    """Count points per floor bin over the tight square around their ``(x, y)``.

    With ``bin_size`` (meters) the grid side is derived from the data instead
    of ``d``.  Points on the max edge fall in the last bin.
    """
    cloud = np.asarray(cloud, dtype=np.float64)
    if cloud.ndim != 2 or cloud.shape[0] == 0:
        raise GeometryError("point cloud is empty")
    if bin_size is None and d < 2:
        raise GeometryError(f"need at least 2 bins per side, got {d}")
    xy = cloud[:, :2]
    extent, d2 = square_extent(xy, bin_size=bin_size)
    d = d2 if bin_size is not None else d
    side = extent[2] - extent[0]
    ix = np.floor((xy[:, 0] - extent[0]) / side * d).astype(np.int64)
    iy = np.floor((xy[:, 1] - extent[1]) / side * d).astype(np.int64)
    ix = np.clip(ix, 0, d - 1)
    iy = np.clip(iy, 0, d - 1)
    flat = (d - 1 - iy) * d + ix
    counts = np.bincount(flat, minlength=d * d).reshape(d, d)
    return WallGrid(counts=counts.astype(np.int64), extent=extent)


def wall_threshold(n_max: int, ratio: float = DEFAULT_THRESHOLD_RATIO) -> int:
    return max(1, int(math.ceil(n_max * ratio)))


def extract_walls(grid: WallGrid, ratio: float = DEFAULT_THRESHOLD_RATIO) -> WallImage:
    """Keep bins whose count reaches ``ceil(ratio * n_max)``."""
    n_max = int(grid.counts.max())
    if n_max == 0:
        raise NoWallsError("histogram is empty; no walls detected")
    thr = wall_threshold(n_max, ratio)
    return WallImage(bits=grid.counts >= thr, threshold=thr, n_max=n_max)


def pixels_to_points(bits) -> np.ndarray:
    """One point ``(col, d - 1 - row)`` per set pixel, in row-major scan order."""
    bits = np.asarray(bits, dtype=bool)
    rows, cols = np.nonzero(bits)
    if rows.size == 0:
        raise NoWallsError("wall image has no set pixels")
    h = bits.shape[0]
    return np.stack([cols, h - 1 - rows], axis=1).astype(np.float64)


@dataclass(frozen=True)
class Normalization:
    """Aspect-preserving map ``p -> (p - center) * scale / refine``."""

    center: tuple[float, float]
    scale: float
    refine: float = 1.0

    @classmethod
    def fit(cls, pts) -> "Normalization":
        pts = np.asarray(pts, dtype=np.float64)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        extent = float(np.max(hi - lo))
        if not extent > 0:
            raise GeometryError("cannot normalize coincident points")
        center = 0.5 * (lo + hi)
        scale = 2.0 / extent
        # divide by the realized max so the extreme coordinate is exactly 1.0
        refine = float(np.max(np.abs((pts - center) * scale)))
        return cls(center=(float(center[0]), float(center[1])), scale=scale, refine=refine)

    def apply(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        return (pts - np.asarray(self.center)) * self.scale / self.refine

    def invert(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        return pts * self.refine / self.scale + np.asarray(self.center)


def normalize_points(pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=np.float64)
    return np.clip(Normalization.fit(pts).apply(pts), -1.0, 1.0)


def subsample_indices(n: int, p_n: int, seed=None) -> np.ndarray:
    """``min(p_n, n)`` distinct indices in random order."""
    if p_n <= 0:
        raise ValueError("p_n must be positive")
    if n <= 0:
        raise GeometryError("cannot subsample an empty point set")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.permutation(n)[:min(p_n, n)]


def subsample_points(pts, p_n: int, seed=None) -> np.ndarray:
    pts = np.asarray(pts, dtype=np.float64)
    return pts[subsample_indices(len(pts), p_n, seed)]


def write_sidecar(path, grid: WallGrid, image: WallImage, ratio: float, **extra) -> None:
    lines = [
        f"d = {grid.d}",
        f"min_x = {grid.extent[0]!r}",
        f"min_y = {grid.extent[1]!r}",
        f"max_x = {grid.extent[2]!r}",
        f"max_y = {grid.extent[3]!r}",
        f"bin_size = {grid.bin_size!r}",
        f"n_points = {int(grid.counts.sum())}",
        f"n_max = {image.n_max}",
        f"threshold_ratio = {ratio!r}",
        f"threshold = {image.threshold}",
    ]
    lines += [f"{k} = {v}" for k, v in extra.items()]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
