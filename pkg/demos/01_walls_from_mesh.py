"""From a triangle mesh to a wall image.

Builds a two-room apartment (floor, outer walls and one shared wall with a
doorway gap), samples points on its surface, projects them onto a floor
histogram and keeps the bins that collect at least a quarter of the busiest
bin.  Floor points spread thinly over every bin, wall points pile up in the
few bins under each wall, so the threshold separates them cleanly.

    python demos/01_walls_from_mesh.py [out_dir]
"""
import sys
from pathlib import Path

import numpy as np

from roomcloud.geom import TriMesh, sample_mesh
from roomcloud.geom.io import write_pgm
from roomcloud.walls import extract_walls, pixels_to_points, project_histogram


def wall_quads(segments, height):
    verts, tris = [], []
    for (x0, y0), (x1, y1) in segments:
        base = len(verts)
        verts += [(x0, y0, 0), (x1, y1, 0), (x1, y1, height), (x0, y0, height)]
        tris += [(base, base + 1, base + 2), (base, base + 2, base + 3)]
    return verts, tris


def apartment(w=7.0, d=4.0, split=3.0, door=(1.5, 2.5), height=2.5):
    segments = [((0, 0), (w, 0)), ((w, 0), (w, d)), ((w, d), (0, d)), ((0, d), (0, 0)),
                ((split, 0), (split, door[0])), ((split, door[1]), (split, d))]
    verts, tris = wall_quads(segments, height)
    base = len(verts)
    verts += [(0, 0, 0), (w, 0, 0), (w, d, 0), (0, d, 0)]
    tris += [(base, base + 1, base + 2), (base, base + 2, base + 3)]
    return TriMesh(np.array(verts, float), np.array(tris))


def main(out_dir="."):
    mesh = apartment()
    print(f"mesh: {len(mesh.triangles)} triangles, {mesh.areas().sum():.1f} m^2 of surface")

    cloud = sample_mesh(mesh, 300_000, seed=0)
    grid = project_histogram(cloud, d=128)
    print(f"histogram: {grid.d}x{grid.d} bins of {grid.bin_size * 100:.1f} cm, "
          f"busiest bin holds {grid.counts.max()} points")

    walls = extract_walls(grid)
    print(f"threshold n_max/4 = {walls.threshold}: {int(walls.bits.sum())} wall bins")

    # the same wall pixels as a 2D point set, ready for the pointer network
    pts = pixels_to_points(walls.bits)
    print(f"{len(pts)} wall points, x in [{pts[:, 0].min():.0f}, {pts[:, 0].max():.0f}]")

    out = Path(out_dir) / "apartment_walls.pgm"
    write_pgm(out, walls.bits)
    print(f"wrote {out}")


if __name__ == "__main__":
    main(*sys.argv[1:])
