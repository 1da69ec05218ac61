"""Pixel-level evaluation: confusion counts, accuracy/IoU/F1, PR curves.

Building is the positive class. Counts from parallel shards combine by
addition; scores are computed once from the aggregated (micro-averaged)
counts, matching single epoch-level numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

DEFAULT_PR_THRESHOLDS = tuple(np.linspace(0.0, 1.0, 101))


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )


@dataclass
class MetricReport:
    accuracy: float
    iou: float
    f1: float
    dice_score: float
    pr_points: List[Tuple[float, float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "iou": self.iou,
            "f1": self.f1,
            "dice_score": self.dice_score,
            "pr_points": [list(p) for p in self.pr_points],
        }


def _as_binary(arr, name: str) -> np.ndarray:
    a = np.asarray(arr)
    if not np.isin(a, (0, 1)).all():
        raise ValueError(f"{name} must be binary (0/1)")
    return a.astype(bool)


def confusion(pred, target) -> ConfusionCounts:
    """Exact tp/fp/fn/tn pixel counts for a binary prediction."""
    p = _as_binary(pred, "pred")
    t = _as_binary(target, "target")
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: pred {p.shape} vs target {t.shape}")
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = int(np.count_nonzero(~p & ~t))
    return ConfusionCounts(tp, fp, fn, tn)


def scores(counts: ConfusionCounts) -> MetricReport:
    """Accuracy, IoU and F1 from aggregated counts.

    Empty-union convention: when nothing is predicted and nothing is present
    (tp+fp+fn = 0), IoU and F1 are 1, needed for all-background tiles.
    """
    if counts.total <= 0:
        raise ValueError("counts must cover at least one pixel")
    accuracy = (counts.tp + counts.tn) / counts.total
    union = counts.tp + counts.fp + counts.fn
    if union == 0:
        iou = f1 = 1.0
    else:
        iou = counts.tp / union
        f1 = 2 * counts.tp / (2 * counts.tp + counts.fp + counts.fn)
    return MetricReport(accuracy=accuracy, iou=iou, f1=f1, dice_score=f1)


def pr_curve(
    probs,
    target,
    thresholds: Sequence[float] = DEFAULT_PR_THRESHOLDS,
) -> List[Tuple[float, float, float]]:
    """(threshold, precision, recall) by binarizing p(building) >= tau.

    0/0 conventions: precision is 1 when nothing is predicted; recall is 1
    only when the target has no positives.
    """
    if len(thresholds) == 0:
        raise ValueError("threshold list must be nonempty")
    taus = list(thresholds)
    if any(t < 0 or t > 1 for t in taus) or taus != sorted(taus):
        raise ValueError("thresholds must be ascending values in [0, 1]")
    p1 = np.asarray(probs)
    if p1.ndim == 3 and p1.shape[-1] == 2:
        p1 = p1[..., 1]
    t = _as_binary(target, "target")
    if p1.shape != t.shape:
        raise ValueError(f"shape mismatch: probs {p1.shape} vs target {t.shape}")
    n_pos = int(np.count_nonzero(t))
    points = []
    for tau in taus:
        pred = p1 >= tau
        tp = int(np.count_nonzero(pred & t))
        n_pred = int(np.count_nonzero(pred))
        precision = tp / n_pred if n_pred else 1.0
        recall = tp / n_pos if n_pos else 1.0
        points.append((float(tau), precision, recall))
    return points


def accumulate_pr_counts(
    probs, target, thresholds: Sequence[float]
) -> List[ConfusionCounts]:
    """Per-threshold confusion counts for one batch, addable across batches."""
    p1 = np.asarray(probs)
    if p1.ndim >= 3 and p1.shape[-1] == 2:
        p1 = p1[..., 1]
    t = _as_binary(target, "target")
    out = []
    for tau in thresholds:
        pred = p1 >= tau
        tp = int(np.count_nonzero(pred & t))
        fp = int(np.count_nonzero(pred & ~t))
        fn = int(np.count_nonzero(~pred & t))
        tn = t.size - tp - fp - fn
        out.append(ConfusionCounts(tp, fp, fn, tn))
    return out


def pr_points_from_counts(
    thresholds: Sequence[float], counts: Iterable[ConfusionCounts]
) -> List[Tuple[float, float, float]]:
    points = []
    for tau, c in zip(thresholds, counts):
        precision = c.tp / (c.tp + c.fp) if (c.tp + c.fp) else 1.0
        recall = c.tp / (c.tp + c.fn) if (c.tp + c.fn) else 1.0
        points.append((float(tau), precision, recall))
    return points
