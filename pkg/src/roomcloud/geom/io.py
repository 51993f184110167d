"""File formats: OBJ triangle subset, ASCII ``x y z`` point clouds, and PGM masks."""
from __future__ import annotations

import os

import numpy as np

from roomcloud.errors import DatasetFormatError, MeshError
from roomcloud.geom.mesh import TriMesh


def read_obj(path) -> TriMesh:
    """Parse ``v x y z`` and ``f i j k`` lines (1-based, triangles only).

    Face tokens of the form ``i/t/n`` keep only the vertex index.  All other
    line types are ignored.
    """
    verts, faces = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise MeshError(f"{path}:{lineno}: vertex needs 3 coordinates")
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(tok.split("/")[0]) for tok in parts[1:]]
                if len(idx) != 3:
                    raise MeshError(f"{path}:{lineno}: only triangular faces are supported")
                faces.append([i - 1 for i in idx])
    return TriMesh(np.array(verts, dtype=np.float64).reshape(-1, 3),
                   np.array(faces, dtype=np.int64).reshape(-1, 3))


def write_obj(path, mesh: TriMesh) -> None:
    with open(path, "w") as fh:
        for x, y, z in mesh.vertices.tolist():
            fh.write(f"v {x!r} {y!r} {z!r}\n")
        for i, j, k in mesh.triangles + 1:
            fh.write(f"f {i} {j} {k}\n")


def read_xyz(path) -> np.ndarray:
    pts = np.loadtxt(path, dtype=np.float64, ndmin=2, comments="#")
    if pts.size == 0:
        return np.zeros((0, 3))
    if pts.shape[1] < 3:
        raise DatasetFormatError(f"{path}: expected 'x y z' per line")
    return pts[:, :3]


def write_xyz(path, pts) -> None:
    np.savetxt(path, np.asarray(pts, dtype=np.float64).reshape(-1, 3), fmt="%.17g")


def write_pgm(path, image, binary: bool = True) -> None:
    """Write a mask (bool) or an 8-bit gray image; set mask bits become 255."""
    img = np.asarray(image)
    if img.dtype == bool:
        img = img.astype(np.uint8) * 255
    img = img.astype(np.uint8)
    h, w = img.shape
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        if binary:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(img.tobytes())
        else:
            fh.write(f"P2\n{w} {h}\n255\n".encode("ascii"))
            for row in img:
                fh.write((" ".join(str(int(v)) for v in row) + "\n").encode("ascii"))
    os.replace(tmp, path)


def _pgm_tokens(data: bytes):
    pos = 0
    while True:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        yield data[start:pos], pos


def read_pgm(path, as_mask: bool = True) -> np.ndarray:
    """Read P2 or P5.  With ``as_mask`` a pixel is set iff its value is nonzero."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = _pgm_tokens(data)
    magic, _ = next(tokens)
    if magic not in (b"P2", b"P5"):
        raise DatasetFormatError(f"{path}: not a PGM file (magic {magic!r})")
    w = int(next(tokens)[0])
    h = int(next(tokens)[0])
    maxval, pos = next(tokens)
    maxval = int(maxval)
    if magic == b"P5":
        if maxval > 255:
            raise DatasetFormatError(f"{path}: 16-bit PGM is not supported")
        raw = data[pos + 1:pos + 1 + w * h]
        if len(raw) != w * h:
            raise DatasetFormatError(f"{path}: truncated pixel data")
        img = np.frombuffer(raw, dtype=np.uint8).reshape(h, w).copy()
    else:
        vals = [int(next(tokens)[0]) for _ in range(w * h)]
        img = np.array(vals, dtype=np.int64).reshape(h, w)
    if as_mask:
        return img > 0
    return img
