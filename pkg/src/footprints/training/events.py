"""Append-only metric event log, one CSV row per (step, split, name)."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

EVENT_FIELDS = ("step", "split", "name", "value", "wall_time")


@dataclass
class MetricEvent:
    step: int
    split: str
    name: str
    value: float
    wall_time: float


class EventLog:
    """Collects MetricEvents and flushes them to CSV incrementally.

    Steps must be nondecreasing per (split, name). The clock is injectable;
    wall_time is seconds since the log was opened.
    """

    def __init__(self, path=None, clock: Optional[Callable[[], float]] = None):
        self.path = Path(path) if path is not None else None
        self._clock = clock if clock is not None else time.monotonic
        self._t0 = self._clock()
        self.events: List[MetricEvent] = []
        self._flushed = 0
        self._last_step: Dict[Tuple[str, str], int] = {}

    def emit(self, step: int, split: str, name: str, value: float) -> MetricEvent:
        key = (split, name)
        if key in self._last_step and step < self._last_step[key]:
            raise ValueError(
                f"step {step} regresses below {self._last_step[key]} for {split}/{name}"
            )
        self._last_step[key] = step
        event = MetricEvent(step, split, name, float(value), self._clock() - self._t0)
        self.events.append(event)
        return event

    def flush(self) -> None:
        if self.path is None:
            return
        new = self.events[self._flushed :]
        if not new and self._flushed:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        write_header = self._flushed == 0
        with open(self.path, "a", newline="") as f:
            writer = csv.writer(f)
            if write_header:
                writer.writerow(EVENT_FIELDS)
            for e in new:
                writer.writerow([e.step, e.split, e.name, repr(e.value), f"{e.wall_time:.6f}"])
        self._flushed = len(self.events)


def read_events(path) -> List[MetricEvent]:
    events = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            events.append(
                MetricEvent(
                    step=int(row["step"]),
                    split=row["split"],
                    name=row["name"],
                    value=float(row["value"]),
                    wall_time=float(row["wall_time"]),
                )
            )
    return events
