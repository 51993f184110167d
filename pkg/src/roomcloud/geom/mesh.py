"""Triangle meshes and area-weighted surface sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from roomcloud.errors import MeshError


@dataclass(frozen=True)
class TriMesh:
    vertices: np.ndarray   # (V, 3) float, meters
    triangles: np.ndarray  # (T, 3) int, 0-based

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        t = np.asarray(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must have shape (V, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshError(f"triangles must have shape (T, 3), got {t.shape}")
        if not np.all(np.isfinite(v)):
            raise MeshError("mesh has non-finite vertices")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MeshError("triangle index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    def areas(self) -> np.ndarray:
        a, b, c = (self.vertices[self.triangles[:, k]] for k in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def sample_mesh(mesh: TriMesh, n: int, seed=None, return_index: bool = False):
    """Draw ``n`` points uniformly over the mesh surface.

    A triangle is picked with probability proportional to its area, then a
    point is placed uniformly inside it using the square-root barycentric map.
    """
    areas = mesh.areas()
    total = areas.sum()
    if not total > 0:
        raise MeshError("mesh has zero total area")
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = np.random.default_rng(seed)
    cum = np.cumsum(areas)
    face = np.searchsorted(cum, rng.random(n) * total, side="right")
    face = np.minimum(face, len(areas) - 1)
    r1 = np.sqrt(rng.random(n))[:, None]
    r2 = rng.random(n)[:, None]
    tri = mesh.vertices[mesh.triangles[face]]
    pts = (1 - r1) * tri[:, 0] + r1 * (1 - r2) * tri[:, 1] + r1 * r2 * tri[:, 2]
    if return_index:
        return pts, face
    return pts
