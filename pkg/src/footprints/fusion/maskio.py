"""ProbabilityMask interchange: 2-channel float raster + JSON sidecar."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Tuple

import numpy as np


def save_probability_mask(
    base_path,
    probs: np.ndarray,
    model_id: str = "",
    scene_id: str = "",
) -> Tuple[Path, Path]:
    """Write <base>.npy (HxWx2 float32) and <base>.json (shape/model/scene)."""
    probs = np.asarray(probs, dtype=np.float32)
    if probs.ndim != 3 or probs.shape[-1] != 2:
        raise ValueError(f"probability mask must be HxWx2, got {probs.shape}")
    base = Path(base_path)
    base.parent.mkdir(parents=True, exist_ok=True)
    npy_path = base.with_suffix(".npy")
    sidecar_path = base.with_suffix(".json")
    np.save(npy_path, probs)
    sidecar_path.write_text(
        json.dumps(
            {
                "format": "footprints.probability_mask.v1",
                "shape": list(probs.shape),
                "dtype": str(probs.dtype),
                "model_id": model_id,
                "scene_id": scene_id,
            },
            indent=2,
        )
    )
    return npy_path, sidecar_path


def load_probability_mask(path) -> Tuple[np.ndarray, Optional[dict]]:
    """Read a probability raster and its sidecar (None when absent)."""
    path = Path(path)
    npy_path = path if path.suffix == ".npy" else path.with_suffix(".npy")
    probs = np.load(npy_path)
    if probs.ndim != 3 or probs.shape[-1] != 2:
        raise ValueError(f"{npy_path} is not an HxWx2 probability mask: {probs.shape}")
    sidecar_path = npy_path.with_suffix(".json")
    sidecar = json.loads(sidecar_path.read_text()) if sidecar_path.is_file() else None
    return probs, sidecar
