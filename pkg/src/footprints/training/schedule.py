"""One-cycle learning-rate/momentum schedule.

Phase 1 (the first pct_start of the run) raises the LR from max_lr/div_factor
to max_lr by cosine while momentum falls from its high to its low; phase 2
anneals the LR to max_lr/final_div_factor while momentum climbs back. The
two phases meet at the peak step, so lr is continuous and momentum always
moves opposite to it.
"""

from __future__ import annotations

import math
from typing import Tuple


def cosine_interp(start: float, end: float, t: float) -> float:
    return end + (start - end) * (1.0 + math.cos(math.pi * t)) / 2.0


def one_cycle(
    step: int,
    total_steps: int,
    max_lr: float,
    pct_start: float = 0.25,
    div_factor: float = 25.0,
    final_div_factor: float = 1e4,
    momentum_range: Tuple[float, float] = (0.95, 0.85),
) -> Tuple[float, float]:
    """(lr, momentum) at an integer step of a one-cycle run."""
    if total_steps < 2:
        raise ValueError(f"total_steps must be >= 2, got {total_steps}")
    if not 0 <= step < total_steps:
        raise ValueError(f"step {step} out of range [0, {total_steps})")
    if max_lr <= 0:
        raise ValueError(f"max_lr must be > 0, got {max_lr}")
    if not 0.0 < pct_start < 1.0:
        raise ValueError(f"pct_start must be in (0, 1), got {pct_start}")
    high, low = momentum_range
    # Peak at an integer step so max(lr) == max_lr exactly for any length.
    peak = min(max(int(round(pct_start * total_steps)), 1), max(total_steps - 2, 1))
    if step <= peak:
        t = step / peak
        return cosine_interp(max_lr / div_factor, max_lr, t), cosine_interp(high, low, t)
    t = (step - peak) / max(total_steps - 1 - peak, 1)
    return cosine_interp(max_lr, max_lr / final_div_factor, t), cosine_interp(low, high, t)
