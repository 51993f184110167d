from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class PtrNetConfig:
    """Pointer network hyperparameters.

    Defaults are desk scale; :meth:`paper_scale` gives the original 512-unit
    setup (512 hidden, attention 512, batch 128).
    """

    hidden: int = 128
    attn: int = 128
    lr: float = 1e-3
    batch: int = 32
    beam_width: int = 4
    grad_clip_norm: float = 5.0
    max_steps: int = 3000
    b: int = 10
    k_max: int = 5
    seed: int = 0
    init_scale: float = 0.08
    checkpoint_every: int = 500
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    dtype: str = "float64"   # compute precision of forward/backward; weights stay float64
    lr_decay_steps: int = 0  # cosine decay of lr to 0 over this many steps; 0 keeps lr constant

    def __post_init__(self):
        for name in ("hidden", "attn", "batch", "beam_width", "b", "k_max", "checkpoint_every"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_steps < 0 or self.lr_decay_steps < 0:
            raise ValueError("max_steps and lr_decay_steps must be nonnegative")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if not self.grad_clip_norm > 0:
            raise ValueError("grad_clip_norm must be positive")
        if self.dtype not in ("float64", "float32"):
            raise ValueError(f"dtype must be float64 or float32, got {self.dtype!r}")

    @classmethod
    def paper_scale(cls, **overrides) -> "PtrNetConfig":
        base = dict(hidden=512, attn=512, batch=128, max_steps=30000)
        base.update(overrides)
        return cls(**base)

    @property
    def max_decode_len(self) -> int:
        return self.b * self.k_max + 1

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PtrNetConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def replace(self, **changes) -> "PtrNetConfig":
        return dataclasses.replace(self, **changes)
