"""Domain types shared across the package.

Peak times cross module boundaries in seconds; sample indices appear only
inside detectors and in the on-disk annotation format.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class Group(str, enum.Enum):
    HEALTHY = "healthy"
    COPD = "copd"


class Phase(str, enum.Enum):
    REST = "rest"
    WALKING = "walking"
    RECOVERY = "recovery"


class GroupPhaseKey(NamedTuple):
    group: Group
    phase: Phase


def all_group_phase_keys():
    """Every (group, phase) combination, in enum order."""
    return [GroupPhaseKey(g, p) for g, p in itertools.product(Group, Phase)]


def _frozen_array(values, dtype=np.float64):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PpgRecord:
    """One subject/phase recording.

    Parameters
    ----------
    samples : array_like
        Signal values (raw ADC counts or filtered amplitude).
    sample_rate_hz : float
        Sampling frequency in Hz.
    subject_id : str
        Opaque subject identifier; folds are built from it.
    group, phase : Group, Phase
        Cohort and protocol-phase tags.
    """

    samples: np.ndarray
    sample_rate_hz: float
    subject_id: str = "unknown"
    group: Group = Group.HEALTHY
    phase: Phase = Phase.REST

    def __post_init__(self):
        samples = _frozen_array(self.samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite values")
        if not (self.sample_rate_hz > 0 and np.isfinite(self.sample_rate_hz)):
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz!r}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        object.__setattr__(self, "subject_id", str(self.subject_id))
        object.__setattr__(self, "group", Group(self.group))
        object.__setattr__(self, "phase", Phase(self.phase))

    def __len__(self):
        return len(self.samples)

    def __eq__(self, other):
        if not isinstance(other, PpgRecord):
            return NotImplemented
        return (
            self.sample_rate_hz == other.sample_rate_hz
            and self.subject_id == other.subject_id
            and self.group == other.group
            and self.phase == other.phase
            and np.array_equal(self.samples, other.samples)
        )

    __hash__ = None

    @property
    def duration_s(self):
        return record_duration_s(self)

    @property
    def key(self):
        return GroupPhaseKey(self.group, self.phase)

    def with_samples(self, samples):
        """Copy of this record carrying different sample values."""
        return PpgRecord(samples, self.sample_rate_hz, self.subject_id, self.group, self.phase)


@dataclass(frozen=True, eq=False)
class PeakList:
    """Strictly increasing peak times in seconds."""

    times_s: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        times = _frozen_array(self.times_s)
        if times.ndim != 1:
            raise ValueError("times_s must be 1-D")
        if not np.all(np.isfinite(times)):
            raise ValueError("peak times must be finite")
        if times.size and times[0] < 0:
            raise ValueError("peak times must be non-negative")
        if np.any(np.diff(times) <= 0):
            raise ValueError("peak times must be strictly increasing")
        object.__setattr__(self, "times_s", times)

    @classmethod
    def from_indices(cls, indices, sample_rate_hz):
        idx = np.asarray(indices, dtype=np.int64)
        return cls(index_to_time(idx, sample_rate_hz))

    def to_indices(self, sample_rate_hz):
        return time_to_index(self.times_s, sample_rate_hz)

    def __len__(self):
        return len(self.times_s)

    def __iter__(self):
        return iter(self.times_s.tolist())

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.times_s, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, PeakList):
            return NotImplemented
        return np.array_equal(self.times_s, other.times_s)

    __hash__ = None

    def __repr__(self):
        return f"PeakList(n={len(self)})"


class AnnotatedRecord(NamedTuple):
    record: PpgRecord
    peaks: PeakList


def record_duration_s(record):
    return len(record.samples) / record.sample_rate_hz


def index_to_time(index, rate):
    """Sample index (scalar or array) to seconds."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    if np.ndim(index) == 0:
        return index / rate
    return np.asarray(index, dtype=np.float64) / rate


def time_to_index(t, rate):
    """Seconds to the nearest sample index."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    if np.ndim(t) == 0:
        return int(round(t * rate))
    return np.rint(np.asarray(t, dtype=np.float64) * rate).astype(np.int64)
