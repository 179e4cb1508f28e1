"""Smoothed Recursive Moving Average Crossover (SRMAC) peak detector.

Three EWMAs drive the detector. The fast and slow averages track the input
with different delays; their difference rises above zero on the upstroke of
each systolic pulse. A third EWMA smooths that difference so short spurious
crossings die out, and a region of interest (ROI) is open while

    e_cross(e_fast(x) - e_slow(x)) > threshold

Each ROI yields one peak at the maximum of the input inside it, emitted when
the ROI closes. Work and memory per sample are constant.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from ._pykernels import (
    S_BEST_IDX,
    S_BEST_VAL,
    S_COUNT,
    S_CROSS,
    S_FAST,
    S_IN_ROI,
    S_OPEN,
    S_SLOW,
)
from .filters import BandpassSpec, bandpass, ewma_filter
from .signal_model import PeakList, index_to_time

PARAM_NAMES = ("alpha_fast", "alpha_slow", "alpha_cross", "threshold")


@dataclass(frozen=True)
class SrmacParams:
    """The four SRMAC parameters.

    ``alpha_fast < alpha_slow`` is not required; with the roles swapped the
    difference signal is inverted and positive thresholds see no ROIs.
    """

    alpha_fast: float
    alpha_slow: float
    alpha_cross: float
    threshold: float

    def __post_init__(self):
        for name in ("alpha_fast", "alpha_slow", "alpha_cross"):
            a = getattr(self, name)
            if not (0.0 <= a < 1.0):
                raise ValueError(f"{name} must lie in [0, 1), got {a!r}")
        if not math.isfinite(self.threshold):
            raise ValueError("threshold must be finite")

    @classmethod
    def from_vector(cls, vec):
        return cls(*(float(v) for v in vec))

    def to_vector(self):
        return astuple(self)

    def to_dict(self):
        return dict(zip(PARAM_NAMES, self.to_vector()))

    def scaled(self, s):
        """Parameters for an input scaled by ``s`` (threshold scales with it)."""
        return SrmacParams(self.alpha_fast, self.alpha_slow, self.alpha_cross, self.threshold * s)


class PeakEvent(NamedTuple):
    index: int
    time_s: float
    amplitude: float
    roi_start: int
    roi_end: int


class SrmacDetector:
    """Sample-by-sample SRMAC detector.

    Feed bandpass-filtered samples with :meth:`push`; a :class:`PeakEvent` is
    returned when an ROI closes. :meth:`process` handles a block through the
    compiled kernel with identical results.
    """

    def __init__(self, params, sample_rate_hz=200.0):
        self.params = params
        self.sample_rate_hz = float(sample_rate_hz)
        self._state = _kernels.new_srmac_state()
        self._a = (params.alpha_fast, params.alpha_slow, params.alpha_cross)
        self._b = tuple(1.0 - a for a in self._a)

    @property
    def sample_counter(self):
        return int(self._state[S_COUNT])

    @property
    def in_roi(self):
        return bool(self._state[S_IN_ROI])

    @property
    def outputs(self):
        """Current (e_fast, e_slow, e_cross)."""
        st = self._state
        return float(st[S_FAST]), float(st[S_SLOW]), float(st[S_CROSS])

    def push(self, x):
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"non-finite input sample: {x!r}")
        st = self._state
        af, as_, ac = self._a
        bf, bs, bc = self._b
        ef = af * st[S_FAST] + bf * x
        es = as_ * st[S_SLOW] + bs * x
        ec = ac * st[S_CROSS] + bc * (ef - es)
        st[S_FAST] = ef
        st[S_SLOW] = es
        st[S_CROSS] = ec
        n = int(st[S_COUNT])
        st[S_COUNT] = n + 1
        if ec > self.params.threshold:
            if not st[S_IN_ROI]:
                st[S_IN_ROI] = 1.0
                st[S_OPEN] = n
                st[S_BEST_VAL] = x
                st[S_BEST_IDX] = n
            elif x > st[S_BEST_VAL]:
                st[S_BEST_VAL] = x
                st[S_BEST_IDX] = n
            return None
        if st[S_IN_ROI]:
            st[S_IN_ROI] = 0.0
            return self._make_event(int(st[S_BEST_IDX]), float(st[S_BEST_VAL]), int(st[S_OPEN]), n)
        return None

    def _make_event(self, idx, amplitude, start, end):
        return PeakEvent(idx, index_to_time(idx, self.sample_rate_hz), amplitude, start, end)

    def process(self, x):
        """Push a block of samples; returns the events closed inside it."""
        x = np.asarray(x, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite input sample in block")
        offset = self.sample_counter
        carried = float(self._state[S_BEST_VAL])
        peaks, starts, ends = _kernels.srmac_scan(
            x, *self._a, self.params.threshold, self._state
        )
        events = []
        for p, s, e in zip(peaks.tolist(), starts.tolist(), ends.tolist()):
            # only an ROI carried over from the previous block can peak before it
            amp = float(x[p - offset]) if p >= offset else carried
            events.append(self._make_event(p, amp, s, e))
        return events

    def flush(self):
        """Close an ROI left open at end of stream and emit its peak."""
        st = self._state
        if not st[S_IN_ROI]:
            return None
        st[S_IN_ROI] = 0.0
        return self._make_event(
            int(st[S_BEST_IDX]), float(st[S_BEST_VAL]), int(st[S_OPEN]), int(st[S_COUNT])
        )


def srmac_scan(params, x):
    """Batch SRMAC over a prepared (already filtered) signal.

    Returns ``(peaks, roi_starts, roi_ends)`` index arrays, with an ROI still
    open at the end closed at ``len(x)``.
    """
    state = _kernels.new_srmac_state()
    peaks, starts, ends = _kernels.srmac_scan(
        x, params.alpha_fast, params.alpha_slow, params.alpha_cross, params.threshold, state
    )
    if state[S_IN_ROI]:
        peaks = np.append(peaks, int(state[S_BEST_IDX]))
        starts = np.append(starts, int(state[S_OPEN]))
        ends = np.append(ends, int(state[S_COUNT]))
    return peaks, starts, ends


def prepare(record, spec=None):
    """Bandpass-filter a record into the detector's input signal."""
    return bandpass(record.samples, record.sample_rate_hz, spec or BandpassSpec())


def detect_indices(params, filtered):
    return srmac_scan(params, filtered)[0]


def srmac_detect_batch(params, record, spec=None):
    """Detect systolic peaks in ``record``; returns a :class:`PeakList`."""
    if len(record) < 2:
        # a single sample carries no pulse shape
        return PeakList()
    filtered = prepare(record, spec)
    peaks = detect_indices(params, filtered)
    return PeakList(index_to_time(peaks, record.sample_rate_hz))


def srmac_trace(params, filtered):
    """Per-sample internal signals for plotting: x, e_fast, e_slow, e_cross."""
    x = np.asarray(filtered, dtype=np.float64)
    e_fast = ewma_filter(x, params.alpha_fast)
    e_slow = ewma_filter(x, params.alpha_slow)
    e_cross = ewma_filter(e_fast - e_slow, params.alpha_cross)
    return {"x": x, "e_fast": e_fast, "e_slow": e_slow, "e_cross": e_cross}
