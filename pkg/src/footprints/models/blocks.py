"""Shared network building blocks."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

SCSE_COMBINES = ("mean", "sum", "max")


class DoubleConv(nn.Module):
    """Two (conv k3 s1 p1, batch norm, ReLU) units; same padding keeps H, W."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv2d(in_channels, out_channels, 3, padding=1, bias=False),
            nn.BatchNorm2d(out_channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(out_channels, out_channels, 3, padding=1, bias=False),
            nn.BatchNorm2d(out_channels),
            nn.ReLU(inplace=True),
        )

    def forward(self, x):
        return self.block(x)


class SCSEBlock(nn.Module):
    """Concurrent spatial and channel squeeze-and-excitation recalibration.

    The channel branch gates each channel by a two-layer bottleneck of the
    globally pooled activations; the spatial branch gates each position by a
    1x1 convolution. The gated maps are combined elementwise: "mean"
    (default) averages them, "sum" adds, "max" takes the maximum.
    """

    def __init__(self, channels: int, reduction: int = 2, combine: str = "mean"):
        super().__init__()
        if channels < reduction:
            raise ValueError(f"channels {channels} < reduction {reduction}")
        if channels % reduction != 0:
            raise ValueError(f"channels {channels} not divisible by reduction {reduction}")
        if combine not in SCSE_COMBINES:
            raise ValueError(f"combine must be one of {SCSE_COMBINES}, got {combine!r}")
        self.combine = combine
        self.channel_gate = nn.Sequential(
            nn.AdaptiveAvgPool2d(1),
            nn.Conv2d(channels, channels // reduction, 1),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels // reduction, channels, 1),
            nn.Sigmoid(),
        )
        self.spatial_gate = nn.Sequential(nn.Conv2d(channels, 1, 1), nn.Sigmoid())

    def forward(self, x):
        squeeze = x.unsqueeze(0) if x.ndim == 3 else x
        cse = squeeze * self.channel_gate(squeeze)
        sse = squeeze * self.spatial_gate(squeeze)
        if self.combine == "mean":
            out = 0.5 * (cse + sse)
        elif self.combine == "sum":
            out = cse + sse
        else:
            out = torch.max(cse, sse)
        return out.squeeze(0) if x.ndim == 3 else out


def pixel_shuffle_upsample(feature_map: torch.Tensor, r: int) -> torch.Tensor:
    """Rearrange (C*r^2, H, W) -> (C, r*H, r*W); batched input passes through.

    out[c, r*h + i, r*w + j] = in[c*r^2 + i*r + j, h, w].
    """
    if r < 1:
        raise ValueError(f"upscale factor must be >= 1, got {r}")
    channels = feature_map.shape[-3]
    if channels % (r * r) != 0:
        raise ValueError(f"channel count {channels} not divisible by r^2 = {r * r}")
    if feature_map.ndim == 3:
        return F.pixel_shuffle(feature_map.unsqueeze(0), r).squeeze(0)
    return F.pixel_shuffle(feature_map, r)


class PixelShuffleUp(nn.Module):
    """1x1 conv to out*r^2 channels, then sub-pixel rearrangement."""

    def __init__(self, in_channels: int, out_channels: int, r: int = 2):
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels * r * r, 1)
        self.r = r

    def forward(self, x):
        return pixel_shuffle_upsample(self.conv(x), self.r)


class BasicBlock(nn.Module):
    """ResNet basic block, parameter-compatible with torchvision resnet34."""

    def __init__(self, inplanes: int, planes: int, stride: int = 1, downsample=None):
        super().__init__()
        self.conv1 = nn.Conv2d(inplanes, planes, 3, stride=stride, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(planes)
        self.relu = nn.ReLU(inplace=True)
        self.conv2 = nn.Conv2d(planes, planes, 3, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(planes)
        self.downsample = downsample

    def forward(self, x):
        identity = x if self.downsample is None else self.downsample(x)
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return self.relu(out + identity)


def make_residual_stage(inplanes: int, planes: int, blocks: int, stride: int) -> nn.Sequential:
    """Stack of basic blocks; the first downsamples by stride (no max pool)."""
    downsample = None
    if stride != 1 or inplanes != planes:
        downsample = nn.Sequential(
            nn.Conv2d(inplanes, planes, 1, stride=stride, bias=False),
            nn.BatchNorm2d(planes),
        )
    layers = [BasicBlock(inplanes, planes, stride, downsample)]
    layers.extend(BasicBlock(planes, planes) for _ in range(1, blocks))
    return nn.Sequential(*layers)


class DecoderBlock(nn.Module):
    """Upsample 2x, concatenate the matching-resolution skip, double conv."""

    def __init__(self, in_channels: int, skip_channels: int, out_channels: int, upsample: str):
        super().__init__()
        if upsample == "transposed":
            self.up = nn.ConvTranspose2d(in_channels, out_channels, 2, stride=2)
        elif upsample == "pixel_shuffle":
            self.up = PixelShuffleUp(in_channels, out_channels, r=2)
        else:
            raise ValueError(f"unknown upsample kind {upsample!r}")
        self.conv = DoubleConv(out_channels + skip_channels, out_channels)

    def forward(self, x, skip):
        up = self.up(x)
        if up.shape[2:] != skip.shape[2:]:
            raise ValueError(
                f"skip resolution {tuple(skip.shape[2:])} does not match "
                f"upsampled {tuple(up.shape[2:])}"
            )
        return self.conv(torch.cat([up, skip], dim=1))
