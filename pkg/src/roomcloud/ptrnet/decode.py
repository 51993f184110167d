"""Greedy and beam-search decoding into room polygons.

The terminal slot (index ``n``) may only be chosen after a whole number of
rooms, i.e. when the emitted length is a positive multiple of ``b``; after
``k_max`` rooms it is the only choice.  Disallowed slots are dropped from the
candidate set without renormalizing the rest.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from roomcloud.errors import PartialRoomError
from roomcloud.ptrnet.model import encode_batch, log_softmax, lstm_step


@dataclass(frozen=True)
class Decoded:
    indices: tuple       # emitted slots, terminal index n included when reached
    log_prob: float
    n: int

    @property
    def rooms_indices(self) -> list:
        seq = list(self.indices)
        if seq and seq[-1] == self.n:
            seq = seq[:-1]
        return seq


class _Context:
    """Per-input cached quantities shared by all hypotheses."""

    def __init__(self, params, points):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or len(points) == 0:
            raise ValueError("cannot decode an empty sequence")
        self.params = params
        self.n = len(points)
        hs, (h, c), X, _ = encode_batch(params, points[None], np.array([self.n]))
        self.E1 = hs[0] @ params["W1"]     # (n+1, A)
        self.X = X[0]                      # (n, H) input embeddings fed back
        self.h0, self.c0 = h[0], c[0]

    def step(self, prev, h, c):
        """Advance hypotheses whose last emitted slots are ``prev`` (-1 = start)."""
        p = self.params
        x = np.where((prev < 0)[:, None], p["start_emb"], self.X[np.maximum(prev, 0)])
        h, c = lstm_step(x, h, c, p["dec_Wx"], p["dec_Wh"], p["dec_b"])
        T = np.tanh(self.E1[None] + (h @ p["W2"])[:, None, :])
        return log_softmax(T @ p["v"]), h, c


def _allowed(length: int, n: int, b: int, k_max: int) -> np.ndarray:
    ok = np.ones(n + 1, dtype=bool)
    if length >= b * k_max:
        ok[:n] = False
    elif length == 0 or length % b:
        ok[n] = False
    return ok


def greedy_decode(params, points, b: int = 10, k_max: int = 5) -> Decoded:
    """Pick the most probable allowed slot at every step (lowest index on ties)."""
    ctx = _Context(params, points)
    n = ctx.n
    h, c = ctx.h0[None], ctx.c0[None]
    prev = np.array([-1])
    seq, total = [], 0.0
    while True:
        lp, h, c = ctx.step(prev, h, c)
        row = np.where(_allowed(len(seq), n, b, k_max), lp[0], -np.inf)
        j = int(np.argmax(row))
        total += float(row[j])
        seq.append(j)
        if j == n:
            break
        prev = np.array([j])
    return Decoded(indices=tuple(seq), log_prob=total, n=n)


def _beam(ctx: _Context, width: int, b: int, k_max: int) -> Decoded:
    n = ctx.n
    live_seq, live_score = [()], np.zeros(1)
    h, c = ctx.h0[None], ctx.c0[None]
    fin_seq, fin_score = [], np.zeros(0)
    while live_seq:
        prev = np.array([s[-1] if s else -1 for s in live_seq])
        lp, h, c = ctx.step(prev, h, c)
        allowed = np.stack([_allowed(len(s), n, b, k_max) for s in live_seq])
        total = np.where(allowed, live_score[:, None] + lp, -np.inf).ravel()
        # finished hypotheses first, then hypothesis-major slot order; stable on ties
        pool = np.concatenate([fin_score, total])
        top = np.argsort(-pool, kind="stable")[:width]
        top = top[np.isfinite(pool[top])]
        new_fin_seq, new_fin_score, rows, seqs, scores = [], [], [], [], []
        for t in top:
            if t < len(fin_seq):
                new_fin_seq.append(fin_seq[t])
                new_fin_score.append(pool[t])
                continue
            r, j = divmod(int(t) - len(fin_seq), n + 1)
            seq = live_seq[r] + (j,)
            if j == n:
                new_fin_seq.append(seq)
                new_fin_score.append(pool[t])
            else:
                rows.append(r)
                seqs.append(seq)
                scores.append(pool[t])
        fin_seq, fin_score = new_fin_seq, np.array(new_fin_score)
        if not rows:
            break
        h, c = h[rows], c[rows]
        live_seq, live_score = seqs, np.array(scores)
    k = int(np.argmax(fin_score))
    return Decoded(indices=fin_seq[k], log_prob=float(fin_score[k]), n=n)


def beam_decode(params, points, b: int = 10, k_max: int = 5, width: int = 4) -> Decoded:
    """Width-``width`` beam search ranked by total log-probability.

    Plain beam search is not monotone in its width, so the result is the best
    over widths ``1..width``; ``width=1`` is exactly :func:`greedy_decode`.
    """
    if width < 1:
        raise ValueError("beam width must be at least 1")
    ctx = _Context(params, points)
    best = None
    for w in range(1, width + 1):
        res = _beam(ctx, w, b, k_max)
        if best is None or res.log_prob > best.log_prob:
            best = res
    return best


def decode_rooms(indices, points, b: int) -> list[np.ndarray]:
    """Split emitted indices (terminal stripped if present) into ``b``-point polygons."""
    points = np.asarray(points, dtype=np.float64)
    seq = [int(i) for i in indices]
    n = len(points)
    if seq and seq[-1] == n:
        seq = seq[:-1]
    if any(i < 0 or i >= n for i in seq):
        raise ValueError("index does not point at an input point")
    rem = len(seq) % b
    if rem:
        raise PartialRoomError(f"{len(seq)} indices do not form whole rooms of {b}; "
                               f"{rem} left over", seq[len(seq) - rem:])
    return [points[seq[k:k + b]] for k in range(0, len(seq), b)]
