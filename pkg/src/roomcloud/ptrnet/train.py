"""Mini-batch training loop with checkpointing and exact resume.

The batch at step ``s`` depends only on ``(seed, s)``: epoch ``e`` visits the
samples in the order ``default_rng([seed, e]).permutation(n)``, cut into
``n // batch`` full batches.  Checkpoints carry the Adam moments and the step
counter, so a resumed run continues the same trajectory.
"""
from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, field

import numpy as np

from roomcloud.ptrnet.checkpoint import load_checkpoint, save_checkpoint
from roomcloud.ptrnet.config import PtrNetConfig
from roomcloud.ptrnet.model import init_params, loss_and_grad, make_batch, with_terminal
from roomcloud.ptrnet.optim import AdamState, adam_step, clip_gradients

LOG_FIELDS = ("step", "loss", "grad_norm", "wall_time_s")


@dataclass
class TrainResult:
    params: dict
    state: AdamState
    losses: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)


def batch_indices(n: int, batch: int, seed: int, step: int) -> np.ndarray:
    bs = min(batch, n)
    per_epoch = n // bs
    epoch, k = divmod(step, per_epoch)
    perm = np.random.default_rng([seed, epoch]).permutation(n)
    return perm[k * bs:(k + 1) * bs]


def learning_rate(cfg: PtrNetConfig, step: int) -> float:
    """Step size for update ``step`` (0-based)."""
    if cfg.lr_decay_steps == 0:
        return cfg.lr
    frac = min(step, cfg.lr_decay_steps) / cfg.lr_decay_steps
    return cfg.lr * 0.5 * (1.0 + np.cos(np.pi * frac))


def _prepare(samples):
    out = []
    for p, l in samples:
        p = np.asarray(p, dtype=np.float64)
        out.append((p, with_terminal(l, len(p))))
    return out


def train(samples, cfg: PtrNetConfig, checkpoint_path=None, log_path=None, resume=None,
          on_step=None, extra: dict | None = None) -> TrainResult:
    """Train on ``(points, labels)`` pairs; labels are room blocks without the terminal.

    ``resume`` names a checkpoint to continue from; its config must match
    ``cfg`` except for ``max_steps``.  ``extra`` is stored in every checkpoint
    header (provenance).
    """
    data = _prepare(samples)
    if not data:
        raise ValueError("no training samples")
    if resume is not None:
        params, saved, state, _ = load_checkpoint(resume)
        if saved.replace(max_steps=cfg.max_steps, checkpoint_every=cfg.checkpoint_every) != cfg:
            raise ValueError("checkpoint config does not match the requested run")
        if state is None:
            raise ValueError("checkpoint has no optimizer state to resume from")
    else:
        params = init_params(cfg)
        state = AdamState.zeros_like(params)
    compute = np.dtype(cfg.dtype)

    log = None
    if log_path is not None:
        append = resume is not None and os.path.exists(log_path)
        log = open(log_path, "a" if append else "w", newline="")
        writer = csv.writer(log)
        if not append:
            writer.writerow(LOG_FIELDS)
    result = TrainResult(params=params, state=state)
    t0 = time.perf_counter()
    try:
        while state.step < cfg.max_steps:
            step = state.step
            idx = batch_indices(len(data), cfg.batch, cfg.seed, step)
            batch = make_batch([data[i] for i in idx], ids=[int(i) for i in idx])
            run = params if compute == np.float64 else {k: p.astype(compute) for k, p in params.items()}
            loss, grads = loss_and_grad(run, batch)
            grads = {k: g.astype(np.float64, copy=False) for k, g in grads.items()}
            grads, norm = clip_gradients(grads, cfg.grad_clip_norm)
            adam_step(params, grads, state, learning_rate(cfg, step), cfg.beta1, cfg.beta2,
                      cfg.adam_eps)
            result.losses.append(loss)
            result.grad_norms.append(norm)
            if log is not None:
                writer.writerow([state.step, repr(loss), repr(norm),
                                 f"{time.perf_counter() - t0:.3f}"])
            if on_step is not None:
                on_step(state.step, loss, norm)
            if checkpoint_path is not None and state.step % cfg.checkpoint_every == 0:
                save_checkpoint(checkpoint_path, params, cfg, state, extra)
    finally:
        if log is not None:
            log.close()
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, params, cfg, state, extra)
    return result
