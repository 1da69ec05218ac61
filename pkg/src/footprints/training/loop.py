"""Training loop: Adam epochs, improvement-only checkpoints, metric events.

Everything that varies between the three models (schedule, loss, monitored
metric) comes in through TrainConfig. Runs are deterministic given (config,
data): dataloader shuffling and dropout are reseeded per epoch from the run
seed, so resuming from a checkpoint at epoch k replays exactly what an
unbroken run would have done.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import torch
from torch.utils.data import DataLoader

from footprints.losses import LossConfig, build_loss
from footprints.metrics import (
    ConfusionCounts,
    MetricReport,
    accumulate_pr_counts,
    confusion,
    pr_points_from_counts,
    scores,
)
from footprints.training.checkpoint import load_checkpoint, save_checkpoint
from footprints.training.events import EventLog
from footprints.training.schedule import one_cycle


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 20
    lr: float = 1e-3
    betas: Tuple[float, float] = (0.9, 0.999)
    weight_decay: float = 0.0
    schedule: str = "constant"  # constant | one_cycle
    max_lr: Optional[float] = None  # one_cycle peak; falls back to lr
    pct_start: float = 0.25
    div_factor: float = 25.0
    final_div_factor: float = 1e4
    momentum_range: Tuple[float, float] = (0.95, 0.85)
    seed: int = 0
    monitor: str = "accuracy"  # validation metric that gates checkpoints
    loss: LossConfig = field(default_factory=LossConfig)
    pr_thresholds: Optional[Sequence[float]] = None

    def resolved_max_lr(self) -> float:
        return self.max_lr if self.max_lr is not None else self.lr

    def validate(self) -> List[str]:
        errors = []
        if self.epochs < 1:
            errors.append(f"train.epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            errors.append(f"train.batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            errors.append(f"train.lr must be > 0, got {self.lr}")
        if self.schedule not in ("constant", "one_cycle"):
            errors.append(f"train.schedule must be constant or one_cycle, got {self.schedule!r}")
        if self.schedule == "one_cycle":
            if self.resolved_max_lr() <= 0:
                errors.append(f"train.max_lr must be > 0, got {self.max_lr}")
            if not 0.0 < self.pct_start < 1.0:
                errors.append(f"train.pct_start must be in (0, 1), got {self.pct_start}")
        if self.monitor not in ("accuracy", "iou", "f1", "dice_score", "loss"):
            errors.append(f"train.monitor must be a known metric, got {self.monitor!r}")
        errors.extend(self.loss.validate())
        return errors

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "betas": list(self.betas),
            "weight_decay": self.weight_decay,
            "schedule": self.schedule,
            "max_lr": self.max_lr,
            "pct_start": self.pct_start,
            "div_factor": self.div_factor,
            "final_div_factor": self.final_div_factor,
            "momentum_range": list(self.momentum_range),
            "seed": self.seed,
            "monitor": self.monitor,
            "loss": self.loss.__dict__.copy(),
            "pr_thresholds": list(self.pr_thresholds) if self.pr_thresholds else None,
        }


@dataclass
class FitResult:
    checkpoint_path: Path
    events_path: Optional[Path]
    best_metric: float
    best_epoch: int
    monitor: str


def _epoch_seed(seed: int, epoch: int) -> int:
    return (seed * 1_000_003 + epoch) % (2 ** 63)


def _predictions(output: torch.Tensor) -> torch.Tensor:
    if output.shape[1] == 1:
        return (output.squeeze(1) > 0.5).long()
    return output.argmax(dim=1)


def fit(
    model: torch.nn.Module,
    train_data,
    val_data,
    config: TrainConfig,
    run_dir,
    clock: Optional[Callable[[], float]] = None,
    resume_from=None,
) -> FitResult:
    """Train, evaluating and checkpointing on strict improvement each epoch."""
    errors = config.validate()
    if errors:
        raise ValueError("; ".join(errors))
    if len(train_data) == 0 or len(val_data) == 0:
        raise ValueError("train and validation data must be nonempty")
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    events = EventLog(run_dir / "events.csv", clock=clock)
    loss_fn = build_loss(config.loss)
    optimizer = torch.optim.Adam(
        [p for p in model.parameters() if p.requires_grad],
        lr=config.lr,
        betas=config.betas,
        weight_decay=config.weight_decay,
    )
    mode = "min" if config.monitor == "loss" else "max"
    best = float("inf") if mode == "min" else float("-inf")
    best_epoch = -1
    start_epoch = 0
    checkpoint_path = run_dir / "best.pt"

    if resume_from is not None:
        state = load_checkpoint(resume_from)
        model.load_state_dict(state["model_state"])
        if state["optimizer_state"] is not None:
            optimizer.load_state_dict(state["optimizer_state"])
        best = state["best_metric"]
        best_epoch = state["epoch"]
        start_epoch = state["epoch"] + 1

    steps_per_epoch = max(1, (len(train_data) + config.batch_size - 1) // config.batch_size)
    total_steps = max(config.epochs * steps_per_epoch, 2)
    global_step = start_epoch * steps_per_epoch

    for epoch in range(start_epoch, config.epochs):
        torch.manual_seed(_epoch_seed(config.seed, epoch))
        loader = DataLoader(
            train_data,
            batch_size=config.batch_size,
            shuffle=True,
            generator=torch.Generator().manual_seed(_epoch_seed(config.seed, epoch)),
        )
        model.train()
        train_counts = ConfusionCounts()
        loss_sum = 0.0
        n_seen = 0
        for batch_idx, (x, y) in enumerate(loader):
            lr = config.lr
            if config.schedule == "one_cycle":
                lr, momentum = one_cycle(
                    min(global_step, total_steps - 1),
                    total_steps,
                    config.resolved_max_lr(),
                    config.pct_start,
                    config.div_factor,
                    config.final_div_factor,
                    config.momentum_range,
                )
                for group in optimizer.param_groups:
                    group["lr"] = lr
                    group["betas"] = (momentum, config.betas[1])
            output = model(x)
            loss = loss_fn(output, y)
            if not torch.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch {batch_idx}, lr {lr:.3g}"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            global_step += 1
            loss_sum += float(loss.detach()) * x.shape[0]
            n_seen += x.shape[0]
            with torch.no_grad():
                train_counts = train_counts + confusion(
                    _predictions(output).numpy(), y.numpy()
                )
        train_scores = scores(train_counts)
        events.emit(epoch, "train", "loss", loss_sum / n_seen)
        events.emit(epoch, "train", "accuracy", train_scores.accuracy)

        report, val_loss = evaluate(
            model,
            val_data,
            config.loss,
            batch_size=config.batch_size,
            pr_thresholds=config.pr_thresholds,
        )
        events.emit(epoch, "val", "loss", val_loss)
        events.emit(epoch, "val", "accuracy", report.accuracy)
        events.emit(epoch, "val", "iou", report.iou)
        events.emit(epoch, "val", "f1", report.f1)
        events.emit(epoch, "val", "dice_score", report.dice_score)
        for tau, precision, recall in report.pr_points:
            events.emit(epoch, "val", f"precision@{tau:.2f}", precision)
            events.emit(epoch, "val", f"recall@{tau:.2f}", recall)

        monitored = val_loss if config.monitor == "loss" else getattr(report, config.monitor)
        improved = monitored < best if mode == "min" else monitored > best
        if improved:
            best = monitored
            best_epoch = epoch
            save_checkpoint(
                checkpoint_path,
                model,
                optimizer,
                epoch,
                best,
                config.monitor,
                config_echo=config.to_dict(),
            )
        events.flush()

    return FitResult(
        checkpoint_path=checkpoint_path,
        events_path=events.path,
        best_metric=best,
        best_epoch=best_epoch,
        monitor=config.monitor,
    )


def evaluate(
    model,
    data,
    loss: LossConfig,
    batch_size: int = 20,
    pr_thresholds: Optional[Sequence[float]] = None,
    sample_dir=None,
    max_samples: int = 4,
) -> Tuple[MetricReport, float]:
    """Micro-averaged metrics + mean loss over a dataset, in eval mode.

    Optionally writes up to max_samples side-by-side (input, target,
    prediction) PNG triples into sample_dir.
    """
    if len(data) == 0:
        raise ValueError("evaluation data is empty")
    loss_fn = build_loss(loss)
    loader = DataLoader(data, batch_size=batch_size, shuffle=False)
    if hasattr(model, "eval"):
        model.eval()
    counts = ConfusionCounts()
    pr_counts = None
    loss_sum = 0.0
    n_seen = 0
    saved = 0
    with torch.no_grad():
        for x, y in loader:
            output = model(x)
            loss_sum += float(loss_fn(output, y)) * x.shape[0]
            n_seen += x.shape[0]
            pred = _predictions(output)
            counts = counts + confusion(pred.numpy(), y.numpy())
            if pr_thresholds is not None:
                p1 = output.squeeze(1) if output.shape[1] == 1 else output[:, 1]
                batch_pr = accumulate_pr_counts(p1.numpy(), y.numpy(), pr_thresholds)
                if pr_counts is None:
                    pr_counts = batch_pr
                else:
                    pr_counts = [a + b for a, b in zip(pr_counts, batch_pr)]
            if sample_dir is not None and saved < max_samples:
                saved += _write_sample_triples(
                    sample_dir, x, y, pred, start_index=saved, limit=max_samples
                )
    report = scores(counts)
    if pr_counts is not None:
        report.pr_points = pr_points_from_counts(pr_thresholds, pr_counts)
    return report, loss_sum / n_seen


def _write_sample_triples(sample_dir, x, y, pred, start_index: int, limit: int) -> int:
    from PIL import Image

    sample_dir = Path(sample_dir)
    sample_dir.mkdir(parents=True, exist_ok=True)
    written = 0
    for i in range(x.shape[0]):
        idx = start_index + written
        if idx >= limit:
            break
        img = x[i].numpy().transpose(1, 2, 0)
        lo, hi = img.min(), img.max()
        img8 = np.zeros_like(img, dtype=np.uint8) if hi <= lo else (
            (img - lo) / (hi - lo) * 255
        ).astype(np.uint8)
        target8 = (y[i].numpy() * 255).astype(np.uint8)
        pred8 = (pred[i].numpy() * 255).astype(np.uint8)
        triple = np.concatenate(
            [img8, np.stack([target8] * 3, axis=-1), np.stack([pred8] * 3, axis=-1)],
            axis=1,
        )
        Image.fromarray(triple).save(sample_dir / f"sample_{idx:02d}.png")
        written += 1
    return written
