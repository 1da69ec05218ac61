"""Config-driven pipeline stages shared by the CLI: prepare, train, predict.

prepare walks every labeled scene, materializes its patches or tiles into
the content-addressed cache (hash hits are skipped, so re-runs are no-ops)
and emits the dataset manifest. train reads that manifest back into cache
datasets and drives the fit loop. predict tiles one scene, runs the model
and stitches the per-tile probabilities back to scene size.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import torch

from footprints.config import RunConfig
from footprints.data import (
    Cache,
    CacheDataset,
    ImageSample,
    TileGrid,
    encode_sample,
    generate_patchset,
    load_dataset_index,
    load_scene,
    normalize_image,
    sample_key,
    sample_patch,
    split_dataset,
    tile_image,
)
from footprints.data.stats import class_stats_from_counts
from footprints.fusion import stitch_tiles
from footprints.models import build_model
from footprints.training import FitResult, fit

DATASET_MANIFEST = "dataset_manifest.json"


@dataclass
class PrepareResult:
    manifest_path: Path
    new_entries: int
    existing_entries: int
    failures: List[Tuple[str, str]] = field(default_factory=list)


def scene_seed(base: int, scene_id: str) -> int:
    return (base * 1_000_003 + zlib.crc32(scene_id.encode())) % (2 ** 32)


def _norm(config: RunConfig) -> Tuple[List[float], List[float]]:
    return list(config.data.norm_mean), list(config.data.norm_std)


def prepare_dataset(config: RunConfig) -> PrepareResult:
    data_cfg = config.data
    cache = Cache(data_cfg.cache_dir)
    descriptors = load_dataset_index(data_cfg.root)
    labeled = [d for d in descriptors if d.has_mask]
    if not labeled:
        raise ValueError(f"no scenes with masks under {data_cfg.root}")
    train_desc, val_desc = split_dataset(labeled, data_cfg.split)
    assignment = {d.scene_id: "train" for d in train_desc}
    assignment.update({d.scene_id: "val" for d in val_desc})

    norm = _norm(config)
    grid = TileGrid(data_cfg.tile_size, data_cfg.pad_policy, data_cfg.resize_to)
    entries = {"train": [], "val": []}
    new = existing = 0
    n_bg = n_fg = 0
    failures: List[Tuple[str, str]] = []
    for desc in labeled:
        split_name = assignment[desc.scene_id]
        try:
            sample = load_scene(desc)
            fg = int(np.count_nonzero(sample.mask))
            n_fg += fg
            n_bg += sample.mask.size - fg
            if data_cfg.mode == "patches":
                specs = generate_patchset(
                    sample,
                    data_cfg.count,
                    seed=scene_seed(data_cfg.seed, desc.scene_id),
                    output_size=data_cfg.output_size,
                )
                for spec in specs:
                    key = sample_key(desc.scene_id, spec, norm)
                    if cache.has(key):
                        existing += 1
                    else:
                        image, mask = sample_patch(sample, spec, norm)
                        cache.put(key, encode_sample(image, mask))
                        new += 1
                    entries[split_name].append(key)
            else:
                for tile_img, tile_mask, index in tile_image(sample, grid):
                    key = sample_key(
                        desc.scene_id,
                        {"tile_index": index, "tile_size": grid.tile_size,
                         "resize_to": grid.resize_to, "pad": grid.pad_policy},
                        norm,
                    )
                    if cache.has(key):
                        existing += 1
                    else:
                        image = normalize_image(tile_img, *norm)
                        cache.put(key, encode_sample(image, tile_mask))
                        new += 1
                    entries[split_name].append(key)
        except Exception as exc:
            failures.append((desc.scene_id, str(exc)))

    stats = class_stats_from_counts(n_bg, n_fg, data_cfg.stats_beta)
    manifest_path = Path(data_cfg.cache_dir) / DATASET_MANIFEST
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text(
        json.dumps(
            {
                "descriptors": [d.to_dict() for d in descriptors],
                "split": assignment,
                "class_stats": stats.to_dict(),
                "entries": entries,
                "mode": data_cfg.mode,
            },
            indent=2,
            sort_keys=True,
        )
    )
    return PrepareResult(manifest_path, new, existing, failures)


def load_prepared(config: RunConfig) -> Tuple[CacheDataset, CacheDataset, dict]:
    manifest_path = Path(config.data.cache_dir) / DATASET_MANIFEST
    if not manifest_path.is_file():
        raise FileNotFoundError(
            f"no prepared dataset at {manifest_path}; run `footprints prepare` first"
        )
    manifest = json.loads(manifest_path.read_text())
    cache = Cache(config.data.cache_dir)
    return (
        CacheDataset(cache, manifest["entries"]["train"]),
        CacheDataset(cache, manifest["entries"]["val"]),
        manifest,
    )


def train_run(
    config: RunConfig,
    out_dir,
    resume_from=None,
    clock=None,
) -> FitResult:
    train_data, val_data, _ = load_prepared(config)
    model = build_model(config.model, seed=config.train.seed)
    return fit(
        model,
        train_data,
        val_data,
        config.train,
        run_dir=out_dir,
        clock=clock,
        resume_from=resume_from,
        config_echo=config.to_dict(),
    )


def predict_scene(
    model: torch.nn.Module,
    image: np.ndarray,
    config: RunConfig,
    batch_size: Optional[int] = None,
) -> np.ndarray:
    """Tile, forward and stitch one scene into an HxWx2 probability raster."""
    data_cfg = config.data
    grid = TileGrid(data_cfg.tile_size, data_cfg.pad_policy, data_cfg.resize_to)
    sample = ImageSample(image=np.asarray(image), mask=None)
    tiles = tile_iter(sample, grid)
    norm = _norm(config)
    batch_size = batch_size or config.train.batch_size
    model.eval()
    prob_tiles: List[Tuple[int, np.ndarray]] = []
    with torch.no_grad():
        for start in range(0, len(tiles), batch_size):
            chunk = tiles[start : start + batch_size]
            batch = torch.stack(
                [
                    torch.from_numpy(
                        normalize_image(t_img, *norm).transpose(2, 0, 1).copy()
                    )
                    for t_img, _, _ in chunk
                ]
            )
            probs = model(batch)
            if probs.shape[1] == 1:  # regression head -> 2-channel distribution
                p1 = probs[:, 0]
                probs = torch.stack([1.0 - p1, p1], dim=1)
            for (_, _, index), p in zip(chunk, probs):
                prob_tiles.append((index, p.numpy().transpose(1, 2, 0)))
    from footprints.fusion import stitch_tiles

    return stitch_tiles(
        prob_tiles, grid, (image.shape[0], image.shape[1]), interpolation="bilinear"
    )
