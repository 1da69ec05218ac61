"""Segmentation losses for the three models.

All losses consume per-pixel class probabilities (the networks end in
softmax/sigmoid), not logits. Probabilities are clamped away from 0 and 1
before any log so gradients stay bounded.

Shapes: ``probs`` is (N, 2, H, W) with channel 1 = building, ``target`` is
(N, H, W) integer {0, 1}. ``weighted_mse`` takes a single-channel sigmoid
score instead, (N, H, W) or (N, 1, H, W).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import torch

PROB_EPS = 1e-7


@dataclass
class LossConfig:
    """Declarative loss choice, expressed in the run config file.

    ``weights`` may be explicit per-class numbers, ``"per_batch"`` to derive
    effective-number weights from each batch's pixel counts (``beta`` sets
    the imbalance hyperparameter), or None for unit weights.
    """

    kind: str = "dice"
    gamma: float = 2.0
    smooth: float = 1.0
    weights: Union[Sequence[float], str, None] = None
    beta: float = 1.0 - 1e-9
    combine_alpha: float = 0.5

    KINDS = ("dice", "weighted_ce", "focal", "combined_dice_focal", "weighted_mse")

    def validate(self) -> list[str]:
        errors = []
        if self.kind not in self.KINDS:
            errors.append(f"loss.kind must be one of {self.KINDS}, got {self.kind!r}")
        if self.gamma < 0:
            errors.append(f"loss.gamma must be >= 0, got {self.gamma}")
        if self.smooth <= 0:
            errors.append(f"loss.smooth must be > 0, got {self.smooth}")
        if not 0.0 <= self.combine_alpha <= 1.0:
            errors.append(f"loss.combine_alpha must be in [0, 1], got {self.combine_alpha}")
        if isinstance(self.weights, str) and self.weights != "per_batch":
            errors.append(f"loss.weights string form must be 'per_batch', got {self.weights!r}")
        if isinstance(self.weights, (list, tuple)) and any(w <= 0 for w in self.weights):
            errors.append(f"loss.weights must be positive, got {self.weights}")
        if not 0.0 <= self.beta < 1.0:
            errors.append(f"loss.beta must be in [0, 1), got {self.beta}")
        return errors


def _check_shapes(probs: torch.Tensor, target: torch.Tensor) -> None:
    if probs.ndim != 4 or probs.shape[1] != 2:
        raise ValueError(f"probs must be (N, 2, H, W), got {tuple(probs.shape)}")
    if target.shape != (probs.shape[0], probs.shape[2], probs.shape[3]):
        raise ValueError(
            f"target shape {tuple(target.shape)} does not match probs {tuple(probs.shape)}"
        )


def _resolve_weights(
    weights: Union[Sequence[float], torch.Tensor, None],
    like: torch.Tensor,
) -> torch.Tensor:
    if weights is None:
        return torch.ones(2, dtype=like.dtype, device=like.device)
    w = torch.as_tensor(weights, dtype=like.dtype, device=like.device)
    if w.shape != (2,):
        raise ValueError(f"expected 2 class weights, got shape {tuple(w.shape)}")
    return w


def dice_loss(probs: torch.Tensor, target: torch.Tensor, smooth: float = 1.0) -> torch.Tensor:
    """Soft dice loss on the building channel, averaged over the batch.

    1 - (2*sum(p1*t) + smooth) / (sum(p1) + sum(t) + smooth), per sample.
    """
    _check_shapes(probs, target)
    p1 = probs[:, 1]
    t = target.to(probs.dtype)
    inter = (p1 * t).flatten(1).sum(dim=1)
    denom = p1.flatten(1).sum(dim=1) + t.flatten(1).sum(dim=1)
    dice = (2.0 * inter + smooth) / (denom + smooth)
    return (1.0 - dice).mean()


def _prob_of_true_class(probs: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    idx = target.long().unsqueeze(1)
    return probs.gather(1, idx).squeeze(1)


def focal_loss(
    probs: torch.Tensor,
    target: torch.Tensor,
    gamma: float = 2.0,
    weights: Union[Sequence[float], torch.Tensor, None] = None,
) -> torch.Tensor:
    """Mean over pixels of -w(t) * (1 - p_t)^gamma * log(p_t).

    With gamma = 0 and unit weights this reduces exactly to cross-entropy.
    """
    _check_shapes(probs, target)
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    w = _resolve_weights(weights, probs)
    p_t = _prob_of_true_class(probs, target).clamp(PROB_EPS, 1.0 - PROB_EPS)
    w_t = w[target.long()]
    modulator = (1.0 - p_t) ** gamma if gamma != 0 else torch.ones_like(p_t)
    return (-w_t * modulator * torch.log(p_t)).mean()


def weighted_ce(
    probs: torch.Tensor,
    target: torch.Tensor,
    weights: Union[Sequence[float], torch.Tensor, None] = None,
) -> torch.Tensor:
    """Mean over pixels of -w(t) * log(p_t)."""
    _check_shapes(probs, target)
    w = _resolve_weights(weights, probs)
    if (w <= 0).any():
        raise ValueError(f"class weights must be positive, got {w.tolist()}")
    p_t = _prob_of_true_class(probs, target).clamp(PROB_EPS, 1.0 - PROB_EPS)
    w_t = w[target.long()]
    return (-w_t * torch.log(p_t)).mean()


def combined_dice_focal(
    probs: torch.Tensor,
    target: torch.Tensor,
    alpha: float = 0.5,
    gamma: float = 2.0,
    smooth: float = 1.0,
) -> torch.Tensor:
    """alpha * dice + (1 - alpha) * focal; alpha 0.5 weighs them equally."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return alpha * dice_loss(probs, target, smooth) + (1.0 - alpha) * focal_loss(
        probs, target, gamma
    )


def weighted_mse(
    pred: torch.Tensor,
    target: torch.Tensor,
    weights: Union[Sequence[float], torch.Tensor, None] = None,
) -> torch.Tensor:
    """Mean of w(t) * (pred - t)^2 for the single-channel regression head."""
    if pred.ndim == 4 and pred.shape[1] == 1:
        pred = pred.squeeze(1)
    if pred.shape != target.shape:
        raise ValueError(
            f"pred shape {tuple(pred.shape)} does not match target {tuple(target.shape)}"
        )
    w = _resolve_weights(weights, pred)
    t = target.to(pred.dtype)
    w_t = w[target.long()]
    return (w_t * (pred - t) ** 2).mean()


def effective_number(count: Union[int, float, torch.Tensor], beta: float):
    """(1 - beta^n) / (1 - beta), the saturation-corrected sample count.

    Returns 0 for n = 0 and approaches 1/(1-beta) as n grows.
    """
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must be in [0, 1), got {beta}")
    if isinstance(count, torch.Tensor):
        return (1.0 - beta ** count.double()) / (1.0 - beta)
    return (1.0 - beta ** float(count)) / (1.0 - beta)


def per_batch_weights(target: torch.Tensor, beta: float) -> torch.Tensor:
    """Effective-number class weights from one batch's pixel counts.

    Weights are 1/E(n) normalized to sum to the class count (2). A class
    absent from the batch gets weight 0 (E(0) = 0 would otherwise divide by
    zero), and the remaining mass goes to the present class.
    """
    if target.numel() == 0:
        raise ValueError("target batch contains no pixels")
    counts = torch.stack(
        [(target == 0).sum(), (target == 1).sum()]
    ).double()
    eff = effective_number(counts, beta)
    raw = torch.where(counts > 0, 1.0 / eff.clamp(min=1e-300), torch.zeros_like(eff))
    return (raw * (2.0 / raw.sum())).to(torch.get_default_dtype())


def build_loss(config: LossConfig) -> Callable[[torch.Tensor, torch.Tensor], torch.Tensor]:
    """Bind a LossConfig into a (probs, target) -> scalar callable."""
    errors = config.validate()
    if errors:
        raise ValueError("; ".join(errors))

    def class_weights(target: torch.Tensor) -> Optional[torch.Tensor]:
        if config.weights == "per_batch":
            return per_batch_weights(target, config.beta)
        return None if config.weights is None else torch.as_tensor(config.weights)

    if config.kind == "dice":
        return lambda p, t: dice_loss(p, t, config.smooth)
    if config.kind == "weighted_ce":
        return lambda p, t: weighted_ce_allow_zero(p, t, class_weights(t))
    if config.kind == "focal":
        return lambda p, t: focal_loss(p, t, config.gamma, class_weights(t))
    if config.kind == "combined_dice_focal":
        return lambda p, t: combined_dice_focal(
            p, t, config.combine_alpha, config.gamma, config.smooth
        )
    if config.kind == "weighted_mse":
        return lambda p, t: weighted_mse(p, t, class_weights(t))
    raise ValueError(f"unknown loss kind {config.kind!r}")


def weighted_ce_allow_zero(
    probs: torch.Tensor,
    target: torch.Tensor,
    weights: Union[Sequence[float], torch.Tensor, None],
) -> torch.Tensor:
    """weighted_ce variant tolerating a zero weight from per-batch derivation."""
    _check_shapes(probs, target)
    w = _resolve_weights(weights, probs)
    if (w < 0).any():
        raise ValueError(f"class weights must be nonnegative, got {w.tolist()}")
    p_t = _prob_of_true_class(probs, target).clamp(PROB_EPS, 1.0 - PROB_EPS)
    w_t = w[target.long()]
    return (-w_t * torch.log(p_t)).mean()
