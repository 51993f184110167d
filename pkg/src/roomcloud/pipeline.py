"""Glue between wall images, the pointer network and evaluation."""
from __future__ import annotations

import numpy as np

from roomcloud.evalbench import EvalResult, evaluate_sample
from roomcloud.geom import bresenham
from roomcloud.ptrnet import beam_decode, decode_rooms
from roomcloud.synthgen import pseudo_sort
from roomcloud.walls import Normalization, pixels_to_points, subsample_indices

WALL_GRAY = 128


def wall_points(bits, p_n: int, ordering: str = "pseudosort", seed=0):
    """Normalized, subsampled and ordered points from a wall image.

    Returns ``(points, normalization)``; ``normalization.invert`` maps back to
    the ``(col, d - 1 - row)`` pixel frame.  Only ``random`` and ``pseudosort``
    are possible here since real walls carry no room assignment.
    """
    if ordering not in ("random", "pseudosort"):
        raise ValueError(f"ordering {ordering!r} needs ground-truth rooms")
    pts = pixels_to_points(bits)
    norm = Normalization.fit(pts)
    idx = subsample_indices(len(pts), p_n, seed)
    sel = np.clip(norm.apply(pts[idx]), -1.0, 1.0)
    if ordering == "pseudosort":
        sel = sel[pseudo_sort(sel)]
    return sel, norm


def predict_rooms(params, points, b: int, k_max: int, beam: int = 4):
    """Decode one input sequence; returns ``(Decoded, list of (b, 2) polygons)``."""
    dec = beam_decode(params, points, b=b, k_max=k_max, width=beam)
    return dec, decode_rooms(dec.indices, points, b)


def to_pixels(poly, height: int) -> np.ndarray:
    """Point frame ``(x, y)`` -> image ``(col, row)``."""
    poly = np.asarray(poly, dtype=np.float64)
    return np.stack([poly[:, 0], height - 1 - poly[:, 1]], axis=1)


def render_overlay(bits, rooms_px) -> np.ndarray:
    """8-bit image: walls gray, predicted borders white, background black."""
    bits = np.asarray(bits, dtype=bool)
    h, w = bits.shape
    img = np.where(bits, WALL_GRAY, 0).astype(np.uint8)
    for poly in rooms_px:
        q = np.rint(np.asarray(poly)).astype(int)
        for k in range(len(q)):
            (c0, r0), (c1, r1) = q[k], q[(k + 1) % len(q)]
            cr = bresenham(c0, r0, c1, r1)
            ok = (cr[:, 0] >= 0) & (cr[:, 0] < w) & (cr[:, 1] >= 0) & (cr[:, 1] < h)
            img[cr[ok, 1], cr[ok, 0]] = 255
    return img


def evaluate_records(records, predictions, ordering: str = "", input_length: int = 0,
                     name: str = "") -> EvalResult:
    """Pair dataset records with per-sample predicted polygons (same order)."""
    records, predictions = list(records), list(predictions)
    if len(records) != len(predictions):
        raise ValueError(f"{len(predictions)} predictions for {len(records)} samples")
    samples = [evaluate_sample(pred, rec.rooms, rec.shape_tags, rec.id)
               for rec, pred in zip(records, predictions)]
    return EvalResult(samples=samples, ordering=ordering, input_length=input_length, name=name)
