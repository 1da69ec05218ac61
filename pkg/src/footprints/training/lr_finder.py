"""Learning-rate range test: sweep LR log-uniformly, watch the smoothed loss.

The sweep runs on a throwaway copy of the model, one mini-batch per LR. The
suggestion is the LR where the exponentially smoothed loss falls fastest
(most negative d(loss)/d(log lr)); the sweep stops early once the smoothed
loss passes 4x its best.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import torch


class DivergenceError(RuntimeError):
    pass


@dataclass
class LRFindResult:
    lrs: List[float]
    smoothed_losses: List[float]
    raw_losses: List[float]
    suggestion: Optional[float]


def _cycle(batches):
    while True:
        yielded = False
        for batch in batches:
            yielded = True
            yield batch
        if not yielded:
            raise ValueError("no batches to sweep over")


def lr_find(
    model: torch.nn.Module,
    batches,
    loss_fn: Callable[[torch.Tensor, torch.Tensor], torch.Tensor],
    lr_range: Tuple[float, float] = (1e-7, 10.0),
    steps: int = 100,
    optimizer_factory: Optional[Callable] = None,
    smoothing: float = 0.98,
    divergence_factor: float = 4.0,
) -> LRFindResult:
    lo, hi = lr_range
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < min < max, got {lr_range}")
    if steps < 10:
        raise ValueError(f"steps must be >= 10, got {steps}")
    if optimizer_factory is None:
        optimizer_factory = lambda params, lr: torch.optim.Adam(params, lr=lr)

    probe = copy.deepcopy(model)
    probe.train()
    optimizer = optimizer_factory(
        [p for p in probe.parameters() if p.requires_grad], lo
    )
    lrs = np.geomspace(lo, hi, steps)
    recorded_lrs: List[float] = []
    smoothed: List[float] = []
    raw: List[float] = []
    avg = 0.0
    best = math.inf
    batch_iter = _cycle(batches)
    for i, lr in enumerate(lrs):
        for group in optimizer.param_groups:
            group["lr"] = float(lr)
        x, y = next(batch_iter)
        loss = loss_fn(probe(x), y)
        value = float(loss.detach())
        if not math.isfinite(value):
            if i == 0:
                raise DivergenceError(
                    f"loss is non-finite at the very first LR {lr:.3g}; "
                    "lower the sweep minimum"
                )
            break
        avg = smoothing * avg + (1.0 - smoothing) * value
        debiased = avg / (1.0 - smoothing ** (i + 1))
        if i > 0 and debiased > divergence_factor * best:
            break
        recorded_lrs.append(float(lr))
        smoothed.append(debiased)
        raw.append(value)
        best = min(best, debiased)
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

    if not recorded_lrs:
        suggestion = None
    elif len(recorded_lrs) == 1:
        suggestion = recorded_lrs[0]
    else:
        slopes = np.gradient(np.asarray(smoothed), np.log(np.asarray(recorded_lrs)))
        suggestion = recorded_lrs[int(np.argmin(slopes))]
    return LRFindResult(recorded_lrs, smoothed, raw, suggestion)
