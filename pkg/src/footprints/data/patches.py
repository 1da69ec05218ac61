"""Random-crop patch sampling with paired image/mask transforms.

All augmentation randomness lives in PatchSpec so the image and its mask go
through identical geometry (crop -> resize -> flips). The image is resized
bilinearly and normalized per channel; the mask is resized nearest-neighbor
(pixel-center convention, matching cv2's bilinear geometry) so it stays
binary.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import cv2
import numpy as np

MIN_CROP_WIDTH = 100
MAX_CROP_WIDTH = 500
HEIGHT_BAND = 0.1  # crop_height within +/-10% of crop_width


@dataclass
class PatchSpec:
    """Externalized record of one augmented patch's randomness."""

    origin: Tuple[int, int]  # (row, col)
    crop_width: int
    crop_height: int
    hflip: bool = False
    vflip: bool = False
    output_size: int = 224

    def validate(self, image_hw: Tuple[int, int]) -> None:
        h, w = image_hw
        r0, c0 = self.origin
        if self.crop_width < 1 or self.crop_height < 1:
            raise ValueError(f"crop size must be positive, got {self.crop_height}x{self.crop_width}")
        if r0 < 0 or c0 < 0:
            raise ValueError(f"origin must be nonnegative, got {self.origin}")
        if r0 + self.crop_height > h:
            raise ValueError(
                f"crop bottom {r0 + self.crop_height} exceeds image height {h}"
            )
        if c0 + self.crop_width > w:
            raise ValueError(f"crop right {c0 + self.crop_width} exceeds image width {w}")
        lo = (1.0 - HEIGHT_BAND) * self.crop_width
        hi = (1.0 + HEIGHT_BAND) * self.crop_width
        if not lo <= self.crop_height <= hi:
            raise ValueError(
                f"crop_height {self.crop_height} outside +/-10% band "
                f"[{lo:.1f}, {hi:.1f}] of crop_width {self.crop_width}"
            )
        if self.output_size < 1:
            raise ValueError(f"output_size must be positive, got {self.output_size}")

    def to_dict(self) -> dict:
        return {
            "origin": list(self.origin),
            "crop_width": self.crop_width,
            "crop_height": self.crop_height,
            "hflip": self.hflip,
            "vflip": self.vflip,
            "output_size": self.output_size,
        }


def nearest_resize(arr: np.ndarray, out_hw: Tuple[int, int]) -> np.ndarray:
    """Nearest-neighbor resize with pixel-center alignment.

    Source index for output i is floor((i + 0.5) * in/out), the rounding of
    the same map cv2 uses for bilinear, so image and mask geometry agree.
    """
    out_h, out_w = out_hw
    in_h, in_w = arr.shape[:2]
    if (in_h, in_w) == (out_h, out_w):
        return arr.copy()
    rows = np.minimum((np.arange(out_h) + 0.5) * in_h / out_h, in_h - 1).astype(np.int64)
    cols = np.minimum((np.arange(out_w) + 0.5) * in_w / out_w, in_w - 1).astype(np.int64)
    return arr[rows][:, cols]


def bilinear_resize(image: np.ndarray, out_hw: Tuple[int, int]) -> np.ndarray:
    out_h, out_w = out_hw
    if image.shape[:2] == (out_h, out_w):
        return image.copy()
    return cv2.resize(image, (out_w, out_h), interpolation=cv2.INTER_LINEAR)


def normalize_image(
    image: np.ndarray, mean: Sequence[float], std: Sequence[float]
) -> np.ndarray:
    """(image - mean) / std per channel, in the image's native value scale."""
    mean = np.asarray(mean, dtype=np.float32)
    std = np.asarray(std, dtype=np.float32)
    if np.any(std == 0):
        raise ValueError("std must be nonzero per channel")
    return (image.astype(np.float32) - mean) / std


def sample_patch(
    sample,
    spec: PatchSpec,
    norm: Tuple[Sequence[float], Sequence[float]],
) -> Tuple[np.ndarray, np.ndarray]:
    """Extract one normalized (image, mask) patch pair under a PatchSpec.

    Returns (float32 SxSx3 image, uint8 SxS mask) with S = spec.output_size.
    """
    image, mask = _sample_arrays(sample)
    spec.validate(image.shape[:2])
    r0, c0 = spec.origin
    img = image[r0 : r0 + spec.crop_height, c0 : c0 + spec.crop_width]
    msk = mask[r0 : r0 + spec.crop_height, c0 : c0 + spec.crop_width]
    out = (spec.output_size, spec.output_size)
    img = bilinear_resize(img, out)
    msk = nearest_resize(msk, out)
    if spec.hflip:
        img = img[:, ::-1]
        msk = msk[:, ::-1]
    if spec.vflip:
        img = img[::-1, :]
        msk = msk[::-1, :]
    mean, std = norm
    return normalize_image(np.ascontiguousarray(img), mean, std), np.ascontiguousarray(msk)


def _sample_arrays(sample) -> Tuple[np.ndarray, np.ndarray]:
    image = np.asarray(sample.image)
    if sample.mask is None:
        raise ValueError(f"scene {getattr(sample, 'scene_id', '?')} has no mask")
    return image, np.asarray(sample.mask)


def generate_patchset(
    sample, count: int, seed: int, output_size: int = 224
) -> List[PatchSpec]:
    """Draw `count` PatchSpecs for one scene, fully determined by seed.

    Sampling order is fixed (width, height, origin, flips) so a seed pins
    every spec. Widths are uniform in [100, 500], truncated with a warning
    when the scene is smaller; heights are uniform within +/-10% of width.
    """
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    h, w = _sample_hw(sample)
    rng = np.random.default_rng(seed)
    w_max = min(MAX_CROP_WIDTH, w, int(h / (1.0 - HEIGHT_BAND)))
    if w_max < 1:
        raise ValueError(f"scene too small to crop: {h}x{w}")
    if w_max < MAX_CROP_WIDTH:
        warnings.warn(
            f"scene {h}x{w} smaller than {MAX_CROP_WIDTH} px; crop widths truncated to {w_max}"
        )
    w_min = min(MIN_CROP_WIDTH, w_max)
    specs = []
    for _ in range(count):
        cw = int(rng.integers(w_min, w_max + 1))
        h_lo = max(int(np.ceil((1.0 - HEIGHT_BAND) * cw)), 1)
        h_hi = min(int(np.floor((1.0 + HEIGHT_BAND) * cw)), h)
        ch = int(rng.integers(h_lo, h_hi + 1))
        r0 = int(rng.integers(0, h - ch + 1))
        c0 = int(rng.integers(0, w - cw + 1))
        hflip = bool(rng.integers(0, 2))
        vflip = bool(rng.integers(0, 2))
        specs.append(
            PatchSpec(
                origin=(r0, c0),
                crop_width=cw,
                crop_height=ch,
                hflip=hflip,
                vflip=vflip,
                output_size=output_size,
            )
        )
    return specs


def _sample_hw(sample) -> Tuple[int, int]:
    if hasattr(sample, "height") and hasattr(sample, "width"):
        return int(sample.height), int(sample.width)
    image = np.asarray(sample.image)
    return image.shape[0], image.shape[1]
