"""Building-footprint segmentation toolkit.

Trains, evaluates and ensembles three U-Net-family models for extracting
building masks from aerial imagery: a scratch U-Net, a ResNet34-encoder
U-Net with scSE attention, and a pixel-shuffle-decoder U-Net. Ships the
supporting pipeline: patch/tile sampling with paired image-mask transforms,
an on-disk sample cache, class-imbalance-aware losses, one-cycle training
with an LR finder, per-pixel confidence ensembling and classical-CV
post-processing, all wired together by the ``footprints`` CLI.
"""

__version__ = "0.1.0"

from footprints.losses import (
    LossConfig,
    build_loss,
    combined_dice_focal,
    dice_loss,
    focal_loss,
    per_batch_weights,
    weighted_ce,
    weighted_mse,
)
from footprints.metrics import ConfusionCounts, MetricReport, confusion, pr_curve, scores

__all__ = [
    "LossConfig",
    "build_loss",
    "dice_loss",
    "focal_loss",
    "weighted_ce",
    "combined_dice_focal",
    "weighted_mse",
    "per_batch_weights",
    "ConfusionCounts",
    "MetricReport",
    "confusion",
    "scores",
    "pr_curve",
    "__version__",
]
