"""Fixed-grid scene tiling: non-overlapping, contiguous, exactly covering.

Scenes whose sides are not multiples of the tile size are padded (reflect by
default) so rows*tile_size x cols*tile_size covers the scene exactly. Tiles
are indexed row-major; stitching back is the inverse (see footprints.fusion).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from footprints.data.patches import bilinear_resize, nearest_resize

PAD_POLICIES = ("reflect", "zero")


@dataclass
class TileGrid:
    tile_size: int = 512
    pad_policy: str = "reflect"
    resize_to: int = 224

    def validate(self) -> List[str]:
        errors = []
        if self.tile_size < 1:
            errors.append(f"tile_size must be >= 1, got {self.tile_size}")
        if self.pad_policy not in PAD_POLICIES:
            errors.append(f"pad_policy must be one of {PAD_POLICIES}, got {self.pad_policy!r}")
        if self.resize_to < 1:
            errors.append(f"resize_to must be >= 1, got {self.resize_to}")
        return errors

    def grid_shape(self, height: int, width: int) -> Tuple[int, int]:
        rows = -(-height // self.tile_size)
        cols = -(-width // self.tile_size)
        return rows, cols


def pad_to_grid(arr: np.ndarray, grid: TileGrid) -> np.ndarray:
    h, w = arr.shape[:2]
    rows, cols = grid.grid_shape(h, w)
    ph, pw = rows * grid.tile_size - h, cols * grid.tile_size - w
    if ph == 0 and pw == 0:
        return arr
    pad = [(0, ph), (0, pw)] + [(0, 0)] * (arr.ndim - 2)
    mode = "reflect" if grid.pad_policy == "reflect" else "constant"
    return np.pad(arr, pad, mode=mode)


def tile_image(
    sample, grid: TileGrid
) -> List[Tuple[np.ndarray, Optional[np.ndarray], int]]:
    """Cut one scene into (tile image, tile mask, row-major index) triples.

    Image tiles are resized bilinearly to grid.resize_to, masks
    nearest-neighbor; with resize_to == tile_size both come back untouched.
    """
    errors = grid.validate()
    if errors:
        raise ValueError("; ".join(errors))
    image = np.asarray(sample.image)
    mask = None if sample.mask is None else np.asarray(sample.mask)
    padded_img = pad_to_grid(image, grid)
    padded_mask = None if mask is None else pad_to_grid(mask, grid)
    rows, cols = grid.grid_shape(image.shape[0], image.shape[1])
    ts, out = grid.tile_size, (grid.resize_to, grid.resize_to)
    tiles = []
    for r in range(rows):
        for c in range(cols):
            sl = (slice(r * ts, (r + 1) * ts), slice(c * ts, (c + 1) * ts))
            tile_img = bilinear_resize(padded_img[sl], out)
            tile_mask = None if padded_mask is None else nearest_resize(padded_mask[sl], out)
            tiles.append((tile_img, tile_mask, r * cols + c))
    return tiles
