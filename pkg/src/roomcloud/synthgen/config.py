from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

SHAPE_FAMILIES = ("rectangular", "rectilinear", "nonright", "curved")
ORDERINGS = ("random", "truesort", "pseudosort")


def _default_weights():
    return {name: 0.25 for name in SHAPE_FAMILIES}


@dataclass(frozen=True)
class GenConfig:
    """Synthetic layout generator settings (lengths in meters, canvas in pixels)."""

    max_rooms: int = 5
    edge_len_range: tuple[float, float] = (2.0, 8.0)
    canvas: int = 128
    b: int = 10
    p_n: int = 300
    shrink: float = 0.1
    jitter_prob: float = 0.5
    dropout_prob: float = 0.1
    shape_weights: dict = field(default_factory=_default_weights)
    seed: int = 0
    margin: int = 4
    place_attempts: int = 20

    def __post_init__(self):
        lo, hi = self.edge_len_range
        if not 0 < lo < hi:
            raise ValueError(f"edge_len_range must satisfy 0 < min < max, got {self.edge_len_range}")
        if self.max_rooms < 1:
            raise ValueError("max_rooms must be at least 1")
        if self.b < 3:
            raise ValueError("b must be at least 3")
        if self.p_n < 1:
            raise ValueError("p_n must be positive")
        for name in ("jitter_prob", "dropout_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be a probability")
        if self.shrink < 0 or 2 * self.shrink >= lo:
            raise ValueError("shrink must be nonnegative and smaller than half the minimum edge")
        if self.canvas <= 2 * self.margin + 1:
            raise ValueError("canvas too small for its margin")
        unknown = set(self.shape_weights) - set(SHAPE_FAMILIES)
        if unknown:
            raise ValueError(f"unknown shape families {sorted(unknown)}")
        w = [float(self.shape_weights.get(k, 0.0)) for k in SHAPE_FAMILIES]
        if min(w) < 0 or sum(w) <= 0:
            raise ValueError("shape_weights must be nonnegative with a positive sum")
        object.__setattr__(self, "edge_len_range", (float(lo), float(hi)))
        object.__setattr__(self, "shape_weights", {k: float(self.shape_weights.get(k, 0.0))
                                                   for k in SHAPE_FAMILIES})

    @property
    def family_probs(self):
        w = [self.shape_weights[k] for k in SHAPE_FAMILIES]
        s = sum(w)
        return [x / s for x in w]

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["edge_len_range"] = list(self.edge_len_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        d = {k: v for k, v in d.items() if k in names}
        if "edge_len_range" in d:
            d["edge_len_range"] = tuple(d["edge_len_range"])
        return cls(**d)

    def replace(self, **changes) -> "GenConfig":
        return dataclasses.replace(self, **changes)
