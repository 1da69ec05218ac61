"""Class-imbalance statistics: pixel counts, effective numbers, weights.

Class index 0 is non-building, 1 is building, matching mask values. The
effective number (1 - beta^n) / (1 - beta) saturates large counts; loss
weights are proportional to its inverse, normalized to sum to the class
count so loss magnitudes stay comparable to the unweighted case.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List

import numpy as np

from footprints.losses import effective_number


@dataclass
class ClassStats:
    pixel_count: List[int]
    fraction: List[float]
    beta: float
    effective_number: List[float]
    weight: List[float]

    CLASS_NAMES = ("non_building", "building")

    def to_dict(self) -> dict:
        return {
            "classes": list(self.CLASS_NAMES),
            "pixel_count": [int(c) for c in self.pixel_count],
            "fraction": list(self.fraction),
            "beta": self.beta,
            "effective_number": list(self.effective_number),
            "weight": list(self.weight),
        }


def class_stats_from_counts(n_background: int, n_building: int, beta: float) -> ClassStats:
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must be in [0, 1), got {beta}")
    counts = np.array([n_background, n_building], dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("no mask pixels counted")
    eff = np.array([effective_number(n, beta) for n in counts])
    raw = np.where(counts > 0, 1.0 / np.maximum(eff, 1e-300), 0.0)
    weight = raw * (len(counts) / raw.sum())
    return ClassStats(
        pixel_count=[int(n_background), int(n_building)],
        fraction=(counts / total).tolist(),
        beta=beta,
        effective_number=eff.tolist(),
        weight=weight.tolist(),
    )


def compute_class_stats(samples: Iterable, beta: float) -> ClassStats:
    """Aggregate mask pixel counts over samples (ImageSamples or raw masks)."""
    n_bg = 0
    n_fg = 0
    seen = False
    for s in samples:
        mask = s.mask if hasattr(s, "mask") else np.asarray(s)
        if mask is None:
            continue
        mask = np.asarray(mask)
        fg = int(np.count_nonzero(mask))
        n_fg += fg
        n_bg += mask.size - fg
        seen = True
    if not seen:
        raise ValueError("need at least one sample with a mask")
    return class_stats_from_counts(n_bg, n_fg, beta)
