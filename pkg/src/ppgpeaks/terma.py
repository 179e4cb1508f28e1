"""TERMA baseline detector (two event-related moving averages).

Pipeline, batch only:

1. zero-phase bandpass,
2. clip negative samples to zero,
3. square,
4. compare a short "peak" moving average against a long "beat" moving
   average lifted by ``beta * mean(z)``; runs where the peak average is above
   form blocks of interest,
5. drop blocks narrower than the peak window, and place one peak per block at
   the maximum of the filtered signal.

The moving averages are centered so blocks line up with the pulses, with
the window truncated at the record edges.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass, replace
from typing import NamedTuple

import numpy as np

from . import _kernels
from .filters import BandpassSpec, FilterMode, bandpass
from .signal_model import PeakList, index_to_time

PARAM_NAMES = ("w1_ms", "w2_ms", "beta")


@dataclass(frozen=True)
class TermaParams:
    """Peak window ``w1_ms``, beat window ``w2_ms`` (both ms) and offset ``beta``."""

    w1_ms: float
    w2_ms: float
    beta: float

    def __post_init__(self):
        if not (0 < self.w1_ms < self.w2_ms):
            raise ValueError(f"need 0 < w1_ms < w2_ms, got {self.w1_ms!r}, {self.w2_ms!r}")
        if self.beta < 0:
            raise ValueError(f"beta must be non-negative, got {self.beta!r}")

    @classmethod
    def from_vector(cls, vec):
        return cls(*(float(v) for v in vec))

    def to_vector(self):
        return astuple(self)

    def to_dict(self):
        return dict(zip(PARAM_NAMES, self.to_vector()))


class TermaPrepared(NamedTuple):
    filtered: np.ndarray
    z: np.ndarray
    z_mean: float
    cumsum: np.ndarray
    sample_rate_hz: float


def window_samples(w_ms, rate):
    """Window length in samples: nearest integer, at least one."""
    return max(1, int(round(w_ms * rate / 1000.0)))


def centered_mean(z, w, cumsum=None):
    """Centered ``w``-sample moving mean, truncated at the edges."""
    z = np.asarray(z, dtype=np.float64)
    if w < 1:
        raise ValueError("window must be at least one sample")
    if cumsum is None:
        cumsum = np.concatenate(([0.0], np.cumsum(z)))
    n = len(z)
    half = (w - 1) // 2
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx - half + w, n)
    return (cumsum[hi] - cumsum[lo]) / (hi - lo)


def terma_preprocess(record, spec=None):
    """Zero-phase bandpass, clip negatives, square. Returns (filtered, z)."""
    spec = spec or BandpassSpec()
    if spec.mode is not FilterMode.ZERO_PHASE:
        spec = replace(spec, mode=FilterMode.ZERO_PHASE)
    filtered = bandpass(record.samples, record.sample_rate_hz, spec)
    z = clip_square(filtered)
    return filtered, z


def clip_square(filtered):
    clipped = np.clip(np.asarray(filtered, dtype=np.float64), 0.0, None)
    return clipped * clipped


def prepare(record, spec=None):
    filtered, z = terma_preprocess(record, spec)
    return TermaPrepared(
        filtered,
        z,
        float(np.mean(z)),
        np.concatenate(([0.0], np.cumsum(z))),
        record.sample_rate_hz,
    )


def terma_blocks(prepared, w1, w2, beta):
    """Blocks of interest for windows given in samples.

    Returns ``(peaks, block_starts, block_ends)``. Equal windows are allowed
    here (they produce no blocks); :class:`TermaParams` rejects them.
    """
    if w1 < 1 or w2 < 1:
        raise ValueError("windows must be at least one sample")
    ma_peak = centered_mean(prepared.z, w1, prepared.cumsum)
    ma_beat = centered_mean(prepared.z, w2, prepared.cumsum)
    thr = ma_beat + beta * prepared.z_mean
    above = ma_peak > thr
    return _kernels.segment_argmax(above, prepared.filtered, w1)


def detect_indices(params, prepared):
    rate = prepared.sample_rate_hz
    w1 = window_samples(params.w1_ms, rate)
    w2 = window_samples(params.w2_ms, rate)
    return terma_blocks(prepared, w1, w2, params.beta)[0]


def terma_detect_batch(params, record, spec=None):
    """Detect systolic peaks with TERMA; returns a :class:`PeakList`."""
    if len(record) < 2:
        return PeakList()
    peaks = detect_indices(params, prepare(record, spec))
    return PeakList(index_to_time(peaks, record.sample_rate_hz))


def terma_trace(params, prepared):
    """Per-sample z, MA_peak, MA_beat and the block threshold for plotting."""
    rate = prepared.sample_rate_hz
    ma_peak = centered_mean(prepared.z, window_samples(params.w1_ms, rate), prepared.cumsum)
    ma_beat = centered_mean(prepared.z, window_samples(params.w2_ms, rate), prepared.cumsum)
    return {
        "x": prepared.filtered,
        "z": prepared.z,
        "ma_peak": ma_peak,
        "ma_beat": ma_beat,
        "threshold": ma_beat + params.beta * prepared.z_mean,
    }
