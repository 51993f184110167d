"""Streaming JSON Lines datasets.

Line 1 is a header ``{"format_version", "gen_config", "ordering", "n_samples", ...}``;
every further line is one sample.  Sample ``i`` draws from
``SeedSequence([seed, i, attempt])``, retrying with the next attempt when noise
wipes out the walls, so any worker count produces the same bytes.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from roomcloud.errors import DatasetFormatError, SampleRejected
from roomcloud.geom.io import write_pgm
from roomcloud.synthgen.config import ORDERINGS, GenConfig
from roomcloud.synthgen.scene import generate_scene, render_scene
from roomcloud.synthgen.sample import LayoutSample, make_ptrnet_sample

FORMAT_VERSION = 1
MAX_ATTEMPTS = 100


def sample_rng(seed: int, index: int, attempt: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index), int(attempt)]))


def build_sample(cfg: GenConfig, index: int, ordering: str) -> LayoutSample:
    for attempt in range(MAX_ATTEMPTS):
        rng = sample_rng(cfg.seed, index, attempt)
        scene = generate_scene(cfg, rng)
        rendered = render_scene(scene, cfg, rng)
        try:
            return make_ptrnet_sample(scene, cfg, ordering, rng, rendered)
        except SampleRejected:
            continue
    raise SampleRejected(f"sample {index}: walls empty after {MAX_ATTEMPTS} attempts")


def sample_record(sample: LayoutSample, index: int) -> dict:
    return {
        "id": index,
        "points": sample.points.tolist(),
        "labels": [int(i) for i in sample.labels],
        "k_rooms": sample.k_rooms,
        "b": sample.b,
        "ordering": sample.ordering,
        "shape_tags": list(sample.shape_tags),
        "rooms": [r.tolist() for r in sample.rooms],
    }


def _work(args):
    cfg, index, ordering, mask_dir = args
    sample = build_sample(cfg, index, ordering)
    if mask_dir is not None:
        write_pgm(os.path.join(mask_dir, f"{index:06d}_walls.pgm"), sample.wall_image)
        for k, m in enumerate(sample.room_masks):
            write_pgm(os.path.join(mask_dir, f"{index:06d}_room{k}.pgm"), m)
    return json.dumps(sample_record(sample, index), separators=(",", ":"))


def generate_dataset(cfg: GenConfig, n_samples: int, ordering: str, out_path, jobs: int = 1,
                     mask_dir=None, extra_header: dict | None = None) -> int:
    """Write ``n_samples`` samples to ``out_path``; returns the sample count.

    Lines are written as they are produced.  On any failure the partial file
    is removed before the error propagates.
    """
    if ordering not in ORDERINGS:
        raise ValueError(f"unknown ordering {ordering!r}")
    if n_samples < 0:
        raise ValueError("n_samples must be nonnegative")
    header = {"format_version": FORMAT_VERSION, "gen_config": cfg.to_dict(),
              "ordering": ordering, "n_samples": int(n_samples)}
    if extra_header:
        header.update(extra_header)
    if mask_dir is not None:
        os.makedirs(mask_dir, exist_ok=True)
    tmp = f"{out_path}.partial"
    tasks = ((cfg, i, ordering, mask_dir) for i in range(n_samples))
    pool = None
    try:
        with open(tmp, "w") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            if jobs > 1:
                import multiprocessing
                pool = multiprocessing.Pool(jobs)
                lines = pool.imap(_work, tasks, chunksize=16)
            else:
                lines = map(_work, tasks)
            for line in lines:
                fh.write(line + "\n")
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    finally:
        if pool is not None:
            pool.terminate()
            pool.join()
    return n_samples


@dataclass
class DatasetRecord:
    id: int
    points: np.ndarray
    labels: np.ndarray
    k_rooms: int
    b: int
    ordering: str
    shape_tags: list
    rooms: list


def _record(d: dict, lineno: int, path) -> DatasetRecord:
    try:
        rec = DatasetRecord(
            id=int(d["id"]),
            points=np.asarray(d["points"], dtype=np.float64).reshape(-1, 2),
            labels=np.asarray(d["labels"], dtype=np.int64),
            k_rooms=int(d["k_rooms"]),
            b=int(d["b"]),
            ordering=str(d["ordering"]),
            shape_tags=list(d["shape_tags"]),
            rooms=[np.asarray(r, dtype=np.float64) for r in d.get("rooms", [])],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetFormatError(f"{path}:{lineno}: malformed sample ({exc})") from exc
    if len(rec.labels) != rec.b * rec.k_rooms:
        raise DatasetFormatError(f"{path}:{lineno}: label length is not b * k_rooms")
    if len(rec.labels) and (rec.labels.min() < 0 or rec.labels.max() >= len(rec.points)):
        raise DatasetFormatError(f"{path}:{lineno}: label points outside the input sequence")
    return rec


def read_header(path) -> dict:
    with open(path) as fh:
        first = fh.readline()
    return _parse_header(first, path)


def _parse_header(line, path) -> dict:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path}: header is not JSON") from exc
    if not isinstance(header, dict) or "format_version" not in header:
        raise DatasetFormatError(f"{path}: missing dataset header")
    if header["format_version"] != FORMAT_VERSION:
        raise DatasetFormatError(f"{path}: unsupported format version {header['format_version']}")
    return header


def iter_dataset(path):
    """Yield the header dict, then one :class:`DatasetRecord` per sample."""
    with open(path) as fh:
        yield _parse_header(fh.readline(), path)
        for lineno, line in enumerate(fh, 2):
            if line.strip():
                try:
                    d = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DatasetFormatError(f"{path}:{lineno}: invalid JSON") from exc
                yield _record(d, lineno, path)


def load_dataset(path):
    it = iter_dataset(path)
    header = next(it)
    return header, list(it)
