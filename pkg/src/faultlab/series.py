"""Core value types: sensor series, event windows, rain records, fault labels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "Modality",
    "Series",
    "EventWindow",
    "PrecipRecord",
    "GroundTruthLabels",
    "validate_events",
]


class Modality(str, Enum):
    """Measurement channel of a sensor series."""

    BOX_TEMP = "box_temp"
    SOIL_MOISTURE = "soil_moisture"


def _as_modality(value: "Modality | str") -> Modality:
    try:
        return Modality(value)
    except ValueError:
        raise DataError(f"unknown modality {value!r}") from None


@dataclass(frozen=True)
class Series:
    """An evenly sampled sensor series for one (node, modality) pair.

    Sample k sits at time ``start_time + k * sample_interval`` (UTC seconds).
    Values are stored as a read-only float64 array; operations never mutate
    their inputs and return new Series objects.
    """

    node_id: str
    modality: Modality
    start_time: float
    sample_interval: float
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "modality", _as_modality(self.modality))
        if not (self.sample_interval > 0):
            raise DataError(f"sample_interval must be > 0, got {self.sample_interval}")
        vals = np.asarray(self.values, dtype=np.float64).copy()
        if vals.ndim != 1:
            raise DataError("values must be one-dimensional")
        if not np.all(np.isfinite(vals)):
            raise DataError("values must be finite (no NaN/inf)")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.shape[0]

    def time_at(self, index: int) -> float:
        return self.start_time + index * self.sample_interval

    def times(self) -> np.ndarray:
        return self.start_time + np.arange(len(self)) * self.sample_interval

    def with_values(self, values: np.ndarray) -> "Series":
        """New series with the same placement but different values."""
        return Series(self.node_id, self.modality, self.start_time,
                      self.sample_interval, values)

    def same_grid(self, other: "Series") -> bool:
        """True when both series share start, spacing, and length."""
        return (self.start_time == other.start_time
                and self.sample_interval == other.sample_interval
                and len(self) == len(other))

    def subseries(self, i0: int, i1: int) -> "Series":
        """Samples [i0, i1) as a new series with a shifted start time."""
        if not 0 <= i0 < i1 <= len(self):
            raise DataError(f"bad subseries bounds [{i0}, {i1}) for length {len(self)}")
        return Series(self.node_id, self.modality, self.time_at(i0),
                      self.sample_interval, self.values[i0:i1])


@dataclass(frozen=True)
class EventWindow:
    """Half-open time window [start, end) of a rainfall event, in UTC seconds."""

    start: float
    end: float

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise DataError("event window bounds must be finite")
        if not self.start < self.end:
            raise DataError(f"event window needs start < end, got [{self.start}, {self.end})")

    @property
    def duration(self) -> float:
        return self.end - self.start


def validate_events(events: Sequence[EventWindow]) -> None:
    """Check that event windows are sorted by start and pairwise disjoint."""
    for prev, cur in zip(events, events[1:]):
        if cur.start < prev.end:
            raise DataError(
                f"event windows must be disjoint and sorted: "
                f"[{prev.start}, {prev.end}) then [{cur.start}, {cur.end})")


@dataclass(frozen=True)
class PrecipRecord:
    """One rain-gauge record: depth in mm accumulated over the interval ending at `time`."""

    time: float
    amount_mm: float

    def __post_init__(self):
        if not math.isfinite(self.time):
            raise DataError("precipitation record time must be finite")
        if not (math.isfinite(self.amount_mm) and self.amount_mm >= 0):
            raise DataError(f"precipitation amount must be >= 0, got {self.amount_mm}")


@dataclass(frozen=True)
class GroundTruthLabels:
    """Positions of injected faults: sample indices for spikes, (start, length)
    windows for noise bursts."""

    short_indices: tuple[int, ...] = ()
    noise_windows: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.short_indices))
        if any(i < 0 for i in idx):
            raise DataError("short fault indices must be >= 0")
        if len(set(idx)) != len(idx):
            raise DataError("short fault indices must be distinct")
        wins = tuple(sorted((int(s), int(n)) for s, n in self.noise_windows))
        for s, n in wins:
            if s < 0 or n <= 0:
                raise DataError(f"noise burst ({s}, {n}) must have start >= 0 and length > 0")
        for (s1, n1), (s2, _) in zip(wins, wins[1:]):
            if s2 < s1 + n1:
                raise DataError("noise bursts must not overlap")
        object.__setattr__(self, "short_indices", idx)
        object.__setattr__(self, "noise_windows", wins)

    @property
    def noise_sample_indices(self) -> tuple[int, ...]:
        out: list[int] = []
        for s, n in self.noise_windows:
            out.extend(range(s, s + n))
        return tuple(out)

    def check_bounds(self, n: int) -> None:
        """Validate that every labeled position fits a series of length n."""
        if self.short_indices and self.short_indices[-1] >= n:
            raise DataError(f"short fault index {self.short_indices[-1]} out of bounds for n={n}")
        for s, ln in self.noise_windows:
            if s + ln > n:
                raise DataError(f"noise burst ({s}, {ln}) out of bounds for n={n}")
