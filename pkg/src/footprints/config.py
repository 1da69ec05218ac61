"""Run configuration: one JSON file fully determines a run.

Three presets matching the paper pipelines ship with the package
(model1/2/3.json). Validation is collected, not fail-fast: every problem in
the file is reported at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence

from footprints.data.index import SplitSpec
from footprints.losses import LossConfig
from footprints.models import ModelConfig
from footprints.training.loop import TrainConfig

PRESETS = ("model1", "model2", "model3")


class ConfigError(ValueError):
    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("invalid config:\n  - " + "\n  - ".join(self.errors))


@dataclass
class DataConfig:
    root: str = ""
    cache_dir: str = ""
    mode: str = "patches"  # patches | tiles
    count: int = 350
    output_size: int = 224
    tile_size: int = 512
    pad_policy: str = "reflect"
    resize_to: int = 224
    norm_mean: Optional[Sequence[float]] = None
    norm_std: Optional[Sequence[float]] = None
    seed: int = 0
    stats_beta: float = 1.0 - 1e-9
    split: SplitSpec = field(default_factory=SplitSpec)

    def validate(self) -> List[str]:
        errors = []
        if self.mode not in ("patches", "tiles"):
            errors.append(f"data.mode must be patches or tiles, got {self.mode!r}")
        if self.count < 0:
            errors.append(f"data.count must be >= 0, got {self.count}")
        for name in ("output_size", "tile_size", "resize_to"):
            if getattr(self, name) < 1:
                errors.append(f"data.{name} must be >= 1, got {getattr(self, name)}")
        if self.pad_policy not in ("reflect", "zero"):
            errors.append(f"data.pad_policy must be reflect or zero, got {self.pad_policy!r}")
        for name in ("norm_mean", "norm_std"):
            value = getattr(self, name)
            if value is None:
                errors.append(f"data.{name} is required (per-channel normalization constants)")
            elif len(value) != 3:
                errors.append(f"data.{name} must have 3 values, got {value}")
        if self.norm_std is not None and any(s == 0 for s in self.norm_std):
            errors.append("data.norm_std values must be nonzero")
        if not 0.0 <= self.stats_beta < 1.0:
            errors.append(f"data.stats_beta must be in [0, 1), got {self.stats_beta}")
        errors.extend(self.split.validate())
        return errors

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "cache_dir": self.cache_dir,
            "mode": self.mode,
            "count": self.count,
            "output_size": self.output_size,
            "tile_size": self.tile_size,
            "pad_policy": self.pad_policy,
            "resize_to": self.resize_to,
            "norm_mean": list(self.norm_mean) if self.norm_mean else None,
            "norm_std": list(self.norm_std) if self.norm_std else None,
            "seed": self.seed,
            "stats_beta": self.stats_beta,
            "split": {
                "mode": self.split.mode,
                "ratio": self.split.ratio,
                "seed": self.split.seed,
                "train_cities": list(self.split.train_cities),
                "val_cities": list(self.split.val_cities),
            },
        }


@dataclass
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def validate(self) -> List[str]:
        return self.data.validate() + self.model.validate() + self.train.validate()

    def to_dict(self) -> dict:
        return {
            "data": self.data.to_dict(),
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
        }


def _build_section(cls, payload: dict, prefix: str, errors: List[str]):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in payload.items():
        if key not in known:
            errors.append(f"{prefix}.{key} is not a recognized option")
            continue
        kwargs[key] = value
    return kwargs


_TUPLE_KEYS = {"betas", "momentum_range"}


def run_config_from_dict(doc: dict) -> RunConfig:
    errors: List[str] = []
    if not isinstance(doc, dict):
        raise ConfigError(["config root must be a JSON object"])
    unknown = set(doc) - {"data", "model", "train"}
    for key in sorted(unknown):
        errors.append(f"{key} is not a recognized section (expected data/model/train)")

    data_payload = dict(doc.get("data", {}))
    split_payload = data_payload.pop("split", {})
    data_kwargs = _build_section(DataConfig, data_payload, "data", errors)
    split_kwargs = _build_section(SplitSpec, dict(split_payload), "data.split", errors)

    model_kwargs = _build_section(ModelConfig, dict(doc.get("model", {})), "model", errors)

    train_payload = dict(doc.get("train", {}))
    loss_payload = train_payload.pop("loss", {})
    train_kwargs = _build_section(TrainConfig, train_payload, "train", errors)
    loss_kwargs = _build_section(LossConfig, dict(loss_payload), "train.loss", errors)
    for key in _TUPLE_KEYS & set(train_kwargs):
        train_kwargs[key] = tuple(train_kwargs[key])

    if errors:
        raise ConfigError(errors)

    config = RunConfig(
        data=DataConfig(split=SplitSpec(**split_kwargs), **data_kwargs),
        model=ModelConfig(**model_kwargs),
        train=TrainConfig(loss=LossConfig(**loss_kwargs), **train_kwargs),
    )
    errors = config.validate()
    if errors:
        raise ConfigError(errors)
    return config


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"])
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"])
    return run_config_from_dict(doc)


def load_preset(name: str) -> RunConfig:
    """One of the shipped per-model pipeline presets (model1/2/3)."""
    if name not in PRESETS:
        raise ConfigError([f"unknown preset {name!r}; expected one of {PRESETS}"])
    text = resources.files("footprints.configs").joinpath(f"{name}.json").read_text()
    return run_config_from_dict(json.loads(text))
