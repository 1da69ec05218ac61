"""ResNet34-encoder U-Nets: scSE-attention variant and pixel-shuffle variant.

The ResNet's original 7x7 conv / max-pool stem is replaced by three
double-conv blocks of 16, 32 and 64 channels (each feeding a skip), followed
by the standard four residual stages of 3, 4, 6 and 3 basic blocks that
downsample by stride instead of pooling. Residual stages keep torchvision
parameter names, so a stock resnet34 state dict loads directly into them.
The skip ladder feeding the decoder is (16, 32, 64, 128, 256); the 512
bottleneck enters the decoder from below.
"""

from __future__ import annotations

from pathlib import Path

import torch
from torch import nn

from footprints.models.blocks import DecoderBlock, DoubleConv, SCSEBlock, make_residual_stage
from footprints.models.unet import _validate_input

RESNET34_BLOCKS = (3, 4, 6, 3)
RESNET34_WIDTHS = (64, 128, 256, 512)


class ResNetEncoder(nn.Module):
    def __init__(self, stem_base: int = 16, scse_reduction: int = 0, scse_combine: str = "mean"):
        super().__init__()
        stem = [stem_base, stem_base * 2, stem_base * 4]
        self.stem_channels = tuple(stem)
        self.pool = nn.MaxPool2d(2, stride=2)
        self.stem1 = DoubleConv(3, stem[0])
        self.stem2 = DoubleConv(stem[0], stem[1])
        self.stem3 = DoubleConv(stem[1], stem[2])
        self.layer1 = make_residual_stage(stem[2], RESNET34_WIDTHS[0], RESNET34_BLOCKS[0], 1)
        self.layer2 = make_residual_stage(RESNET34_WIDTHS[0], RESNET34_WIDTHS[1], RESNET34_BLOCKS[1], 2)
        self.layer3 = make_residual_stage(RESNET34_WIDTHS[1], RESNET34_WIDTHS[2], RESNET34_BLOCKS[2], 2)
        self.layer4 = make_residual_stage(RESNET34_WIDTHS[2], RESNET34_WIDTHS[3], RESNET34_BLOCKS[3], 2)
        self.skip_channels = (stem[0], stem[1], RESNET34_WIDTHS[0], RESNET34_WIDTHS[1], RESNET34_WIDTHS[2])
        self.bottleneck_channels = RESNET34_WIDTHS[3]
        if scse_reduction:
            gated = list(self.skip_channels) + [self.bottleneck_channels]
            self.scse = nn.ModuleList(
                SCSEBlock(c, scse_reduction, scse_combine) for c in gated
            )
        else:
            self.scse = None

    def forward(self, x):
        s1 = self.stem1(x)
        s2 = self.stem2(self.pool(s1))
        s3 = self.stem3(self.pool(s2))
        s3 = self.layer1(s3)
        s4 = self.layer2(s3)
        s5 = self.layer3(s4)
        bottom = self.layer4(s5)
        skips = [s1, s2, s3, s4, s5]
        if self.scse is not None:
            skips = [g(s) for g, s in zip(self.scse[:5], skips)]
            bottom = self.scse[5](bottom)
        return skips, bottom

    def load_resnet34_state(self, state_dict: dict) -> None:
        """Copy layer1..layer4 weights from a resnet34-style state dict."""
        stage_keys = {
            k: v for k, v in state_dict.items() if k.split(".", 1)[0] in
            ("layer1", "layer2", "layer3", "layer4")
        }
        if not stage_keys:
            raise ValueError(
                "checkpoint contains no layer1..layer4 keys; expected a "
                "standard resnet34 state dict"
            )
        missing, unexpected = self.load_state_dict(stage_keys, strict=False)
        residual_missing = [m for m in missing if m.split(".", 1)[0].startswith("layer")]
        if residual_missing or unexpected:
            raise ValueError(
                f"pretrained state dict mismatch: missing {residual_missing}, "
                f"unexpected {list(unexpected)}"
            )


class ResUNet(nn.Module):
    """Shared decoder scaffolding for both ResNet-encoder variants."""

    downsample_factor = 32

    def __init__(
        self,
        stem_base: int = 16,
        dropout_rate: float = 0.0,
        head: str = "softmax",
        upsample: str = "transposed",
        scse_reduction: int = 0,
        scse_combine: str = "mean",
    ):
        super().__init__()
        self.encoder = ResNetEncoder(stem_base, scse_reduction, scse_combine)
        skips = self.encoder.skip_channels
        self.encoder_channels = skips
        self.head_kind = head
        widths = list(reversed(skips))  # (256, 128, 64, 32, 16)
        in_ch = self.encoder.bottleneck_channels
        blocks = []
        for skip_ch, out_ch in zip(reversed(skips), widths):
            blocks.append(DecoderBlock(in_ch, skip_ch, out_ch, upsample))
            in_ch = out_ch
        self.decoder = nn.ModuleList(blocks)
        self.dropout = nn.Dropout2d(dropout_rate)
        out_channels = 1 if head == "regression" else 2
        self.head = nn.Conv2d(in_ch, out_channels, 1)

    def decoder_blocks(self):
        return list(self.decoder)

    def freeze_residual_stages(self) -> None:
        for name in ("layer1", "layer2", "layer3", "layer4"):
            for p in getattr(self.encoder, name).parameters():
                p.requires_grad_(False)

    def load_pretrained_encoder(self, path) -> None:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(
                f"pretrained encoder checkpoint not found: {path}. Save a "
                "standard resnet34 state dict there, or set pretrained=false."
            )
        state = torch.load(path, map_location="cpu")
        if isinstance(state, dict) and "state_dict" in state:
            state = state["state_dict"]
        self.encoder.load_resnet34_state(state)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        _validate_input(x, self.downsample_factor)
        skips, y = self.encoder(x)
        for block, skip in zip(self.decoder, reversed(skips)):
            y = block(y, skip)
        y = self.head(self.dropout(y))
        if self.head_kind == "regression":
            return torch.sigmoid(y)
        return torch.softmax(y, dim=1)
