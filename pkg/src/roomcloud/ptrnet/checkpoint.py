"""Versioned binary checkpoints.

Layout (little-endian)::

    magic  b"RCPTRNET"
    u32    format version
    u32    header length, then UTF-8 JSON {"config": ..., "step": ..., ...}
    u32    tensor count
    per tensor: u32 name length, name, u32 ndim, u64 dims..., float64 data (C order)

Parameters are stored under their own names, Adam moments as ``adam_m/<name>``
and ``adam_v/<name>``.
"""
from __future__ import annotations

import json
import os
import struct

import numpy as np

from roomcloud.errors import DatasetFormatError
from roomcloud.ptrnet.config import PtrNetConfig
from roomcloud.ptrnet.optim import AdamState

MAGIC = b"RCPTRNET"
VERSION = 1


def save_checkpoint(path, params, cfg: PtrNetConfig, state: AdamState | None = None,
                    extra: dict | None = None) -> None:
    header = {"config": cfg.to_dict(), "step": state.step if state is not None else 0}
    if extra:
        header["extra"] = extra
    tensors = [(k, params[k]) for k in sorted(params)]
    if state is not None:
        tensors += [(f"adam_m/{k}", state.m[k]) for k in sorted(state.m)]
        tensors += [(f"adam_v/{k}", state.v[k]) for k in sorted(state.v)]
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors:
            arr = np.ascontiguousarray(arr, dtype="<f8")
            key = name.encode("utf-8")
            fh.write(struct.pack("<I", len(key)))
            fh.write(key)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(arr.tobytes())
    os.replace(tmp, path)


def _read(fh, n):
    data = fh.read(n)
    if len(data) != n:
        raise DatasetFormatError("checkpoint is truncated")
    return data


def load_checkpoint(path):
    """Return ``(params, cfg, state, header)``; ``state`` is None if no moments were saved."""
    with open(path, "rb") as fh:
        if _read(fh, len(MAGIC)) != MAGIC:
            raise DatasetFormatError(f"{path}: not a roomcloud checkpoint")
        version, hlen = struct.unpack("<II", _read(fh, 8))
        if version != VERSION:
            raise DatasetFormatError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(_read(fh, hlen).decode("utf-8"))
        (count,) = struct.unpack("<I", _read(fh, 4))
        tensors = {}
        for _ in range(count):
            (klen,) = struct.unpack("<I", _read(fh, 4))
            name = _read(fh, klen).decode("utf-8")
            (ndim,) = struct.unpack("<I", _read(fh, 4))
            shape = struct.unpack(f"<{ndim}Q", _read(fh, 8 * ndim))
            size = int(np.prod(shape)) if ndim else 1
            arr = np.frombuffer(_read(fh, 8 * size), dtype="<f8").reshape(shape)
            tensors[name] = arr.astype(np.float64)
    cfg = PtrNetConfig.from_dict(header["config"])
    params = {k: v for k, v in tensors.items() if "/" not in k}
    m = {k[7:]: v for k, v in tensors.items() if k.startswith("adam_m/")}
    v = {k[7:]: v for k, v in tensors.items() if k.startswith("adam_v/")}
    state = AdamState(m=m, v=v, step=int(header["step"])) if m else None
    return params, cfg, state, header
