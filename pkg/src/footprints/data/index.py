"""Dataset indexing, scene loading, train/val splitting, manifest export.

Expected layout (INRIA-style): ``<root>/images/*.tif|png`` with matching
``<root>/gt/*.tif|png`` by filename stem. Scenes without a ground-truth
mask are indexed but flagged test-only.
"""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image

IMAGE_EXTENSIONS = (".tif", ".tiff", ".png")

_CITY_RE = re.compile(r"^([a-zA-Z][a-zA-Z-]*?)[-_]?\d*$")


@dataclass
class SceneDescriptor:
    """Lazy handle on one scene: paths and header metadata, no pixels."""

    scene_id: str
    city: str
    image_path: Path
    mask_path: Optional[Path]
    width: int
    height: int

    @property
    def has_mask(self) -> bool:
        return self.mask_path is not None

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "city": self.city,
            "image_path": str(self.image_path),
            "mask_path": str(self.mask_path) if self.mask_path else None,
            "width": self.width,
            "height": self.height,
            "has_mask": self.has_mask,
        }


@dataclass
class ImageSample:
    """One georeferenced scene in memory: color raster + binary mask."""

    image: np.ndarray
    mask: Optional[np.ndarray]
    city: str = ""
    scene_id: str = ""
    source_path: Optional[Path] = None

    def __post_init__(self):
        if self.image.ndim != 3 or self.image.shape[2] != 3:
            raise ValueError(f"image must be HxWx3, got {self.image.shape}")
        if self.mask is not None:
            if self.mask.shape != self.image.shape[:2]:
                raise ValueError(
                    f"mask shape {self.mask.shape} does not match image {self.image.shape[:2]}"
                )
            if not np.isin(self.mask, (0, 1)).all():
                raise ValueError("mask values must be in {0, 1}")

    @property
    def height(self) -> int:
        return self.image.shape[0]

    @property
    def width(self) -> int:
        return self.image.shape[1]


def city_from_stem(stem: str) -> str:
    """Leading alphabetic prefix of a scene stem: austin23 -> austin,
    tyrol-w7 -> tyrol-w."""
    m = _CITY_RE.match(stem)
    return m.group(1) if m else stem


def _image_size(path: Path) -> Tuple[int, int]:
    with Image.open(path) as im:
        w, h = im.size
    return h, w


def load_dataset_index(root) -> List[SceneDescriptor]:
    """Index every scene under root, rejecting image/mask dimension
    mismatches per file."""
    root = Path(root)
    images_dir = root / "images"
    gt_dir = root / "gt"
    if not images_dir.is_dir():
        raise FileNotFoundError(f"missing images directory: {images_dir}")
    if not gt_dir.is_dir():
        raise FileNotFoundError(f"missing gt directory: {gt_dir}")

    mask_by_stem = {
        p.stem: p for p in sorted(gt_dir.iterdir()) if p.suffix.lower() in IMAGE_EXTENSIONS
    }
    descriptors: List[SceneDescriptor] = []
    rejected: List[str] = []
    for img_path in sorted(images_dir.iterdir()):
        if img_path.suffix.lower() not in IMAGE_EXTENSIONS:
            continue
        stem = img_path.stem
        h, w = _image_size(img_path)
        mask_path = mask_by_stem.get(stem)
        if mask_path is not None:
            mh, mw = _image_size(mask_path)
            if (mh, mw) != (h, w):
                rejected.append(f"{stem}: image {h}x{w} vs mask {mh}x{mw}")
                continue
        descriptors.append(
            SceneDescriptor(
                scene_id=stem,
                city=city_from_stem(stem),
                image_path=img_path,
                mask_path=mask_path,
                width=w,
                height=h,
            )
        )
    if rejected:
        warnings.warn(
            "rejected %d scene(s) with image/mask dimension mismatch: %s"
            % (len(rejected), "; ".join(rejected))
        )
    if not descriptors:
        warnings.warn(f"no scenes found under {root}")
    return descriptors


def load_scene(descriptor: SceneDescriptor) -> ImageSample:
    """Load a descriptor's pixels; any nonzero mask value counts as
    building."""
    image = np.asarray(Image.open(descriptor.image_path).convert("RGB"))
    mask = None
    if descriptor.mask_path is not None:
        raw = np.asarray(Image.open(descriptor.mask_path).convert("L"))
        mask = (raw != 0).astype(np.uint8)
    return ImageSample(
        image=image,
        mask=mask,
        city=descriptor.city,
        scene_id=descriptor.scene_id,
        source_path=descriptor.image_path,
    )


@dataclass
class SplitSpec:
    """Train/validation partition rule: seeded random ratio or by city."""

    mode: str = "random_ratio"
    ratio: float = 0.8
    seed: int = 0
    train_cities: Sequence[str] = field(default_factory=tuple)
    val_cities: Sequence[str] = field(default_factory=tuple)

    def validate(self) -> List[str]:
        errors = []
        if self.mode not in ("random_ratio", "geographic"):
            errors.append(f"split.mode must be random_ratio or geographic, got {self.mode!r}")
        if self.mode == "random_ratio" and not 0.0 < self.ratio < 1.0:
            errors.append(f"split.ratio must be in (0, 1), got {self.ratio}")
        if self.mode == "geographic":
            overlap = set(self.train_cities) & set(self.val_cities)
            if overlap:
                errors.append(f"split city lists overlap: {sorted(overlap)}")
            if not self.train_cities or not self.val_cities:
                errors.append("geographic split needs nonempty train_cities and val_cities")
        return errors


def split_dataset(
    descriptors: Sequence[SceneDescriptor], spec: SplitSpec
) -> Tuple[List[SceneDescriptor], List[SceneDescriptor]]:
    """Partition descriptors per the spec; pure in (list order, spec)."""
    errors = spec.validate()
    if errors:
        raise ValueError("; ".join(errors))
    descriptors = list(descriptors)
    if spec.mode == "random_ratio":
        rng = np.random.default_rng(spec.seed)
        perm = rng.permutation(len(descriptors))
        n_train = int(round(spec.ratio * len(descriptors)))
        train_idx = sorted(perm[:n_train].tolist())
        val_idx = sorted(perm[n_train:].tolist())
        return [descriptors[i] for i in train_idx], [descriptors[i] for i in val_idx]

    train_set = set(spec.train_cities)
    val_set = set(spec.val_cities)
    train, val = [], []
    for d in descriptors:
        if d.city in train_set:
            train.append(d)
        elif d.city in val_set:
            val.append(d)
        else:
            raise ValueError(
                f"scene {d.scene_id!r} has city {d.city!r}, which is in neither "
                f"train_cities nor val_cities"
            )
    return train, val


def write_dataset_manifest(
    path,
    descriptors: Sequence[SceneDescriptor],
    split: Optional[Tuple[Sequence[SceneDescriptor], Sequence[SceneDescriptor]]] = None,
    class_stats=None,
) -> Path:
    """Emit the dataset manifest JSON: descriptors, split assignment,
    class statistics."""
    path = Path(path)
    assignment = {}
    if split is not None:
        train, val = split
        assignment = {d.scene_id: "train" for d in train}
        assignment.update({d.scene_id: "val" for d in val})
    doc = {
        "descriptors": [d.to_dict() for d in descriptors],
        "split": assignment,
        "class_stats": class_stats.to_dict() if class_stats is not None else None,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True))
    return path
