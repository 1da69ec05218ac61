"""Torch Dataset adapters over in-memory pairs and cache entries."""

from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np
import torch
from torch.utils.data import Dataset

from footprints.data.cache import Cache, decode_sample


def to_tensor_pair(image: np.ndarray, mask: np.ndarray) -> Tuple[torch.Tensor, torch.Tensor]:
    """HWC float image + HW mask -> (CHW float32, HW int64) tensors."""
    img = torch.from_numpy(np.ascontiguousarray(image.transpose(2, 0, 1))).float()
    return img, torch.from_numpy(np.ascontiguousarray(mask)).long()


class ArraySampleDataset(Dataset):
    def __init__(self, pairs: Sequence[Tuple[np.ndarray, np.ndarray]]):
        self.pairs = list(pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, i: int):
        image, mask = self.pairs[i]
        return to_tensor_pair(image, mask)


class CacheDataset(Dataset):
    """Reads prepared (image, mask) payloads back from the sample cache."""

    def __init__(self, cache: Cache, keys: Sequence[str]):
        self.cache = cache
        self.keys: List[str] = list(keys)

    def __len__(self) -> int:
        return len(self.keys)

    def __getitem__(self, i: int):
        payload = self.cache.get(self.keys[i])
        if payload is None:
            raise KeyError(f"cache entry missing or corrupt: {self.keys[i]}")
        image, mask = decode_sample(payload)
        return to_tensor_pair(image, mask)
