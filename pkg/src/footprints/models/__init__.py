"""The three segmentation network variants behind one build/forward contract.

Every variant maps (N, 3, H, W) images to (N, 2, H, W) per-pixel softmax
probabilities (or a single sigmoid channel with the regression head flag).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import torch
from torch import nn

from footprints.models.blocks import (
    DecoderBlock,
    DoubleConv,
    PixelShuffleUp,
    SCSEBlock,
    pixel_shuffle_upsample,
)
from footprints.models.resunet import ResUNet
from footprints.models.unet import UNetScratch

VARIANTS = ("unet_scratch", "resnet_scse", "resnet_pixelshuffle")


@dataclass
class ModelConfig:
    variant: str = "unet_scratch"
    base_channels: Optional[int] = None  # 64 for scratch, 16 for resnet stems
    encoder_depth: int = 4
    dropout_rate: Optional[float] = None  # 0.5 for scratch, 0.0 for resnet
    pretrained: bool = False
    pretrained_path: Optional[str] = None
    num_classes: int = 2
    head: str = "softmax"
    scse_reduction: int = 2
    scse_combine: str = "mean"
    freeze_encoder: bool = False

    def resolved_base(self) -> int:
        if self.base_channels is not None:
            return self.base_channels
        return 64 if self.variant == "unet_scratch" else 16

    def resolved_dropout(self) -> float:
        if self.dropout_rate is not None:
            return self.dropout_rate
        return 0.5 if self.variant == "unet_scratch" else 0.0

    def validate(self) -> List[str]:
        errors = []
        if self.variant not in VARIANTS:
            errors.append(f"model.variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.variant == "unet_scratch" and self.encoder_depth != 4:
            errors.append(f"unet_scratch uses encoder_depth 4, got {self.encoder_depth}")
        if self.num_classes != 2:
            errors.append(f"model.num_classes is fixed at 2, got {self.num_classes}")
        if self.head not in ("softmax", "regression"):
            errors.append(f"model.head must be softmax or regression, got {self.head!r}")
        if self.dropout_rate is not None and not 0.0 <= self.dropout_rate < 1.0:
            errors.append(f"model.dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.base_channels is not None and self.base_channels < 1:
            errors.append(f"model.base_channels must be >= 1, got {self.base_channels}")
        if self.pretrained and self.variant == "unet_scratch":
            errors.append("unet_scratch has no pretrained weights to load")
        if self.pretrained and not self.pretrained_path:
            errors.append("model.pretrained requires model.pretrained_path")
        return errors

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "base_channels": self.base_channels,
            "encoder_depth": self.encoder_depth,
            "dropout_rate": self.dropout_rate,
            "pretrained": self.pretrained,
            "pretrained_path": self.pretrained_path,
            "num_classes": self.num_classes,
            "head": self.head,
            "scse_reduction": self.scse_reduction,
            "scse_combine": self.scse_combine,
            "freeze_encoder": self.freeze_encoder,
        }


def build_unet_scratch(config: ModelConfig, seed: Optional[int] = None) -> UNetScratch:
    _require_variant(config, "unet_scratch")
    if seed is not None:
        torch.manual_seed(seed)
    return UNetScratch(
        base_channels=config.resolved_base(),
        dropout_rate=config.resolved_dropout(),
        head=config.head,
    )


def build_resnet_scse(config: ModelConfig, seed: Optional[int] = None) -> ResUNet:
    _require_variant(config, "resnet_scse")
    return _build_resunet(config, seed, upsample="transposed", scse=config.scse_reduction)


def build_resnet_pixelshuffle(config: ModelConfig, seed: Optional[int] = None) -> ResUNet:
    _require_variant(config, "resnet_pixelshuffle")
    return _build_resunet(config, seed, upsample="pixel_shuffle", scse=0)


def _build_resunet(config: ModelConfig, seed: Optional[int], upsample: str, scse: int) -> ResUNet:
    if seed is not None:
        torch.manual_seed(seed)
    model = ResUNet(
        stem_base=config.resolved_base(),
        dropout_rate=config.resolved_dropout(),
        head=config.head,
        upsample=upsample,
        scse_reduction=scse,
        scse_combine=config.scse_combine,
    )
    if config.pretrained:
        model.load_pretrained_encoder(config.pretrained_path)
    if config.freeze_encoder:
        model.freeze_residual_stages()
    return model


_BUILDERS = {
    "unet_scratch": build_unet_scratch,
    "resnet_scse": build_resnet_scse,
    "resnet_pixelshuffle": build_resnet_pixelshuffle,
}


def build_model(config: ModelConfig, seed: Optional[int] = None) -> nn.Module:
    errors = config.validate()
    if errors:
        raise ValueError("; ".join(errors))
    return _BUILDERS[config.variant](config, seed)


def _require_variant(config: ModelConfig, variant: str) -> None:
    if config.variant != variant:
        raise ValueError(f"config.variant is {config.variant!r}, expected {variant!r}")


def inspect_skips(model: nn.Module, input_hw=(224, 224)) -> List[dict]:
    """Run a probe forward and report each decoder stage's skip vs upsample
    resolution."""
    records = [dict() for _ in model.decoder_blocks()]
    hooks = []
    for rec, block in zip(records, model.decoder_blocks()):
        def pre_hook(module, args, rec=rec):
            rec["skip_hw"] = tuple(args[1].shape[2:])
            rec["skip_channels"] = int(args[1].shape[1])

        def up_hook(module, args, output, rec=rec):
            rec["up_hw"] = tuple(output.shape[2:])

        hooks.append(block.register_forward_pre_hook(pre_hook))
        hooks.append(block.up.register_forward_hook(up_hook))
    was_training = model.training
    try:
        model.eval()
        with torch.no_grad():
            model(torch.zeros(1, 3, *input_hw))
    finally:
        for h in hooks:
            h.remove()
        model.train(was_training)
    return records


class GradientFlowError(RuntimeError):
    pass


def check_gradient_flow(model: nn.Module, input_hw=(64, 64), seed: int = 0) -> None:
    """One loss backward on a random batch; every trainable parameter must
    get a finite, not-identically-zero gradient. Raises GradientFlowError
    otherwise."""
    from footprints.losses import dice_loss, weighted_mse

    gen = torch.Generator().manual_seed(seed)
    x = torch.randn(1, 3, *input_hw, generator=gen)
    target = (torch.rand(1, *input_hw, generator=gen) > 0.7).long()
    was_training = model.training
    model.eval()  # dropout off so no parameter is masked out by chance
    try:
        model.zero_grad(set_to_none=True)
        out = model(x)
        if out.shape[1] == 1:
            loss = weighted_mse(out, target)
        else:
            loss = dice_loss(out, target)
        loss.backward()
        bad = []
        for name, p in model.named_parameters():
            if not p.requires_grad:
                continue
            if p.grad is None:
                bad.append(f"{name}: no gradient")
            elif not torch.isfinite(p.grad).all():
                bad.append(f"{name}: non-finite gradient")
            elif not p.grad.abs().max() > 0:
                bad.append(f"{name}: identically zero gradient")
        if bad:
            raise GradientFlowError("; ".join(bad))
    finally:
        model.zero_grad(set_to_none=True)
        model.train(was_training)


__all__ = [
    "ModelConfig",
    "VARIANTS",
    "build_model",
    "build_unet_scratch",
    "build_resnet_scse",
    "build_resnet_pixelshuffle",
    "inspect_skips",
    "check_gradient_flow",
    "GradientFlowError",
    "UNetScratch",
    "ResUNet",
    "DoubleConv",
    "DecoderBlock",
    "SCSEBlock",
    "PixelShuffleUp",
    "pixel_shuffle_upsample",
]
