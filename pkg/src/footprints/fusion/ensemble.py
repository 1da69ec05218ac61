"""Per-pixel maximum-confidence ensembling and tile stitching.

A member's confidence at a pixel is the larger of its two class
probabilities; the merged mask copies the full 2-class distribution of the
most confident member (ties go to the lowest member index). Thresholding
then keeps a pixel as building only if the merged building probability
reaches the acceptance threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from footprints.data.patches import bilinear_resize, nearest_resize
from footprints.data.tiles import TileGrid


@dataclass
class EnsembleConfig:
    threshold: float = 0.75
    member_ids: Sequence[str] = field(default_factory=tuple)

    def validate(self) -> List[str]:
        errors = []
        if not 0.5 < self.threshold <= 1.0:
            errors.append(f"ensemble.threshold must be in (0.5, 1], got {self.threshold}")
        if self.member_ids and len(self.member_ids) < 2:
            errors.append("ensemble needs at least 2 members")
        return errors


def _check_members(masks: Sequence[np.ndarray]) -> np.ndarray:
    if len(masks) == 0:
        raise ValueError("no probability masks given")
    arrs = [np.asarray(m, dtype=np.float64) for m in masks]
    shape = arrs[0].shape
    if len(shape) != 3 or shape[-1] != 2:
        raise ValueError(f"probability masks must be HxWx2, got {shape}")
    for i, a in enumerate(arrs):
        if a.shape != shape:
            raise ValueError(f"member {i} shape {a.shape} does not match {shape}")
        if not np.allclose(a.sum(axis=-1), 1.0, atol=1e-4):
            raise ValueError(f"member {i} probabilities do not sum to 1 per pixel")
    return np.stack(arrs)


def ensemble_merge(masks: Sequence[np.ndarray]) -> np.ndarray:
    """Copy each pixel's distribution from the most confident member."""
    stack = _check_members(masks)  # (K, H, W, 2)
    confidence = stack.max(axis=-1)  # (K, H, W)
    winner = confidence.argmax(axis=0)  # ties -> lowest member index
    h_idx, w_idx = np.meshgrid(
        np.arange(stack.shape[1]), np.arange(stack.shape[2]), indexing="ij"
    )
    return stack[winner, h_idx, w_idx]


def confidence_threshold(merged: np.ndarray, threshold: float = 0.75) -> np.ndarray:
    """Building iff merged p(building) >= threshold (inclusive)."""
    if not 0.5 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0.5, 1], got {threshold}")
    merged = np.asarray(merged)
    return (merged[..., 1] >= threshold).astype(np.uint8)


def stitch_tiles(
    tiles: Sequence[Tuple[int, np.ndarray]],
    grid: TileGrid,
    original_hw: Tuple[int, int],
    interpolation: Optional[str] = None,
) -> np.ndarray:
    """Inverse of tiling: place indexed tiles row-major, crop the padding.

    Tiles that were resized (grid.resize_to != tile_size) are resized back to
    tile_size first: nearest for integer arrays (binary masks), bilinear for
    float arrays (probability rasters), unless overridden.
    """
    h, w = original_hw
    rows, cols = grid.grid_shape(h, w)
    expected = rows * cols
    by_index = {}
    for index, tile in tiles:
        if not 0 <= index < expected:
            raise ValueError(f"tile index {index} outside grid of {expected} tiles")
        if index in by_index:
            raise ValueError(f"duplicate tile index {index}")
        by_index[index] = np.asarray(tile)
    missing = [i for i in range(expected) if i not in by_index]
    if missing:
        raise ValueError(f"missing tile index {missing[0]} (of {expected} expected)")

    ts = grid.tile_size
    sample = by_index[0]
    extra = sample.shape[2:]
    canvas = np.zeros((rows * ts, cols * ts) + extra, dtype=sample.dtype)
    for index, tile in by_index.items():
        if tile.shape[:2] != (ts, ts):
            mode = interpolation
            if mode is None:
                mode = "nearest" if np.issubdtype(tile.dtype, np.integer) else "bilinear"
            tile = (
                nearest_resize(tile, (ts, ts))
                if mode == "nearest"
                else bilinear_resize(tile, (ts, ts))
            )
        r, c = divmod(index, cols)
        canvas[r * ts : (r + 1) * ts, c * ts : (c + 1) * ts] = tile
    return canvas[:h, :w]
