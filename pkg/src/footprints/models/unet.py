"""U-Net trained from scratch: 4 encoder / 3 decoder blocks, base width 64."""

from __future__ import annotations

import torch
from torch import nn

from footprints.models.blocks import DecoderBlock, DoubleConv


class UNetScratch(nn.Module):
    """Same-padding U-Net with Xavier-initialized weights.

    Encoder doubles the channel width at each of 4 blocks (64..512 for base
    64) with 2x2/s2 max pooling between; each of the 3 decoder blocks
    transposed-conv upsamples and concatenates the equal-resolution encoder
    skip. Dropout sits between the last decoder block and the 1x1 head.
    """

    downsample_factor = 8

    def __init__(self, base_channels: int = 64, dropout_rate: float = 0.5, head: str = "softmax"):
        super().__init__()
        widths = [base_channels * 2 ** i for i in range(4)]
        self.encoder_channels = tuple(widths)
        self.head_kind = head
        self.pool = nn.MaxPool2d(2, stride=2)
        self.enc1 = DoubleConv(3, widths[0])
        self.enc2 = DoubleConv(widths[0], widths[1])
        self.enc3 = DoubleConv(widths[1], widths[2])
        self.enc4 = DoubleConv(widths[2], widths[3])
        self.dec3 = DecoderBlock(widths[3], widths[2], widths[2], "transposed")
        self.dec2 = DecoderBlock(widths[2], widths[1], widths[1], "transposed")
        self.dec1 = DecoderBlock(widths[1], widths[0], widths[0], "transposed")
        self.dropout = nn.Dropout2d(dropout_rate)
        out_channels = 1 if head == "regression" else 2
        self.head = nn.Conv2d(widths[0], out_channels, 1)
        self.apply(_init_xavier)

    def decoder_blocks(self):
        return [self.dec3, self.dec2, self.dec1]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        _validate_input(x, self.downsample_factor)
        s1 = self.enc1(x)
        s2 = self.enc2(self.pool(s1))
        s3 = self.enc3(self.pool(s2))
        bottom = self.enc4(self.pool(s3))
        y = self.dec3(bottom, s3)
        y = self.dec2(y, s2)
        y = self.dec1(y, s1)
        y = self.head(self.dropout(y))
        if self.head_kind == "regression":
            return torch.sigmoid(y)
        return torch.softmax(y, dim=1)


def _init_xavier(module: nn.Module) -> None:
    if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d)):
        nn.init.xavier_uniform_(module.weight)
        if module.bias is not None:
            nn.init.zeros_(module.bias)


def _validate_input(x: torch.Tensor, factor: int) -> None:
    if x.ndim != 4 or x.shape[1] != 3:
        raise ValueError(f"expected (N, 3, H, W) input, got {tuple(x.shape)}")
    if x.shape[2] % factor or x.shape[3] % factor:
        raise ValueError(
            f"spatial dims {tuple(x.shape[2:])} must be divisible by {factor}"
        )
