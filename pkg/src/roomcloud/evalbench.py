"""Room matching, mean IoU and report tables.

Mean IoU follows the predicted-room denominator: the IoUs of all predicted
rooms (zero for unmatched ones) summed and divided by how many rooms were
predicted.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import Polygon as _ShapelyPolygon

from roomcloud.synthgen.config import SHAPE_FAMILIES

SCHEMA_VERSION = 1


def _region(p):
    """Shapely region for a possibly self-intersecting prediction (repaired with make_valid)."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or len(p) < 3 or not np.all(np.isfinite(p)):
        return None
    g = _ShapelyPolygon(p)
    if not g.is_valid:
        g = shapely.make_valid(g)
    if g.area <= 0.0:
        return None
    return g


def region_iou(a, b) -> float:
    """IoU that tolerates invalid polygons; a degenerate side scores 0."""
    ga, gb = _region(a), _region(b)
    if ga is None or gb is None:
        return 0.0
    inter = ga.intersection(gb).area
    union = ga.area + gb.area - inter
    return float(min(1.0, max(0.0, inter / union))) if union > 0 else 0.0


@dataclass(frozen=True)
class Match:
    gt: int | None
    pred: int | None
    iou: float


def match_rooms(preds, gts) -> list[Match]:
    """Greedy pairing by globally highest IoU until only zero-IoU pairs remain.

    Returns one entry per prediction and per ground truth: matched pairs,
    unmatched predictions (``gt=None``) and unmatched ground truth
    (``pred=None``), all with IoU 0 when unmatched.  Ties go to the lower
    prediction index, then the lower ground-truth index.
    """
    P, G = len(preds), len(gts)
    M = np.zeros((P, G))
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            M[i, j] = region_iou(p, g)
    pairs = []
    free_p, free_g = set(range(P)), set(range(G))
    work = M.copy()
    while free_p and free_g:
        flat = int(np.argmax(work))
        i, j = divmod(flat, G)
        if not work[i, j] > 0.0:
            break
        pairs.append(Match(gt=j, pred=i, iou=float(M[i, j])))
        free_p.discard(i)
        free_g.discard(j)
        work[i, :] = -1.0
        work[:, j] = -1.0
    out = sorted(pairs, key=lambda m: m.pred)
    out += [Match(gt=None, pred=i, iou=0.0) for i in sorted(free_p)]
    out += [Match(gt=j, pred=None, iou=0.0) for j in sorted(free_g)]
    return out


@dataclass
class SampleResult:
    sample_id: int
    matches: list
    n_pred: int
    n_gt: int
    gt_tags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"sample_id": self.sample_id, "n_pred": self.n_pred, "n_gt": self.n_gt,
                "gt_tags": list(self.gt_tags),
                "matches": [[m.gt, m.pred, m.iou] for m in self.matches]}

    @classmethod
    def from_dict(cls, d) -> "SampleResult":
        return cls(sample_id=d["sample_id"], n_pred=d["n_pred"], n_gt=d["n_gt"],
                   gt_tags=list(d["gt_tags"]),
                   matches=[Match(gt=g, pred=p, iou=float(v)) for g, p, v in d["matches"]])


def evaluate_sample(preds, gts, gt_tags=(), sample_id: int = 0) -> SampleResult:
    return SampleResult(sample_id=sample_id, matches=match_rooms(preds, gts), n_pred=len(preds),
                        n_gt=len(gts), gt_tags=list(gt_tags))


def mean_iou(results) -> float:
    """Sum of predicted-room IoUs over the number of predicted rooms."""
    n_pred = sum(r.n_pred for r in results)
    if n_pred == 0:
        raise ValueError("mean IoU is undefined with no predicted rooms")
    total = sum(m.iou for r in results for m in r.matches if m.pred is not None)
    return total / n_pred


def shape_breakdown(results) -> dict:
    """Per-family ``{"mean_iou", "count"}`` over matched ground-truth rooms.

    Every family gets an entry; an empty bucket has count 0 and mean None.
    """
    buckets = {tag: [] for tag in SHAPE_FAMILIES}
    for r in results:
        for tag in r.gt_tags:
            if tag not in buckets:
                raise ValueError(f"unknown shape tag {tag!r}")
        for m in r.matches:
            if m.gt is not None and m.pred is not None:
                buckets[r.gt_tags[m.gt]].append(m.iou)
    return {tag: {"mean_iou": (float(np.mean(v)) if v else None), "count": len(v)}
            for tag, v in buckets.items()}


@dataclass
class EvalResult:
    samples: list
    ordering: str = ""
    input_length: int = 0
    name: str = ""

    @property
    def mean_iou(self) -> float:
        return mean_iou(self.samples)

    @property
    def per_shape(self) -> dict:
        return shape_breakdown(self.samples)

    @property
    def unmatched_predictions(self) -> int:
        return sum(1 for r in self.samples for m in r.matches if m.gt is None)

    @property
    def unmatched_ground_truth(self) -> int:
        return sum(1 for r in self.samples for m in r.matches if m.pred is None)

    def to_dict(self) -> dict:
        return {
            "name": self.name, "ordering": self.ordering, "input_length": self.input_length,
            "mean_iou": self.mean_iou, "per_shape": self.per_shape,
            "n_samples": len(self.samples),
            "n_predicted": sum(r.n_pred for r in self.samples),
            "n_ground_truth": sum(r.n_gt for r in self.samples),
            "unmatched_predictions": self.unmatched_predictions,
            "unmatched_ground_truth": self.unmatched_ground_truth,
            "samples": [r.to_dict() for r in self.samples],
        }

    @classmethod
    def from_dict(cls, d) -> "EvalResult":
        return cls(samples=[SampleResult.from_dict(s) for s in d["samples"]],
                   ordering=d["ordering"], input_length=d["input_length"], name=d.get("name", ""))

    def __eq__(self, other):
        return isinstance(other, EvalResult) and self.to_dict() == other.to_dict()


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.4f}"


def report(results, fmt: str = "text") -> str:
    """Serialize one or more runs.

    Text: a fixed-width ``ordering,input_length,mean_iou`` table (one row per
    run), then per-shape means and unmatched counts.  JSON: versioned document
    that :func:`parse_report` turns back into :class:`EvalResult` objects.
    """
    if isinstance(results, EvalResult):
        results = [results]
    results = list(results)
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, "runs": [r.to_dict() for r in results]}
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = [f"{'ordering':<12} {'input_length':>12} {'mean_iou':>9}"]
    for r in results:
        lines.append(f"{r.ordering:<12} {r.input_length:>12d} {r.mean_iou:>9.4f}")
    lines.append("")
    lines.append(f"{'ordering':<12} {'input_length':>12} " + " ".join(f"{t:>12}" for t in SHAPE_FAMILIES))
    for r in results:
        ps = r.per_shape
        lines.append(f"{r.ordering:<12} {r.input_length:>12d} "
                     + " ".join(f"{_fmt(ps[t]['mean_iou']):>12}" for t in SHAPE_FAMILIES))
    lines.append("")
    lines.append(f"{'ordering':<12} {'input_length':>12} {'unmatched_pred':>15} {'unmatched_gt':>13}")
    for r in results:
        lines.append(f"{r.ordering:<12} {r.input_length:>12d} {r.unmatched_predictions:>15d} "
                     f"{r.unmatched_ground_truth:>13d}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> list[EvalResult]:
    doc = json.loads(text)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema {doc.get('schema_version')}")
    return [EvalResult.from_dict(r) for r in doc["runs"]]
