"""Moving-average filters and the bandpass preprocessing stage.

The EWMA is the recursive form of the simple moving average:

    e[n] = alpha * e[n-1] + (1 - alpha) * x[n],    alpha = (N - 1) / N

It keeps one value of state regardless of alpha, while the SMA needs a
buffer of N samples.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from . import _kernels


class FilterMode(str, enum.Enum):
    CAUSAL = "causal"
    ZERO_PHASE = "zero-phase"


def _check_finite(x):
    if not math.isfinite(x):
        raise ValueError(f"non-finite input sample: {x!r}")


def _check_alpha(alpha):
    if not (0.0 <= alpha < 1.0):
        raise ValueError(f"alpha must lie in [0, 1), got {alpha!r}")


def alpha_from_window(n):
    """EWMA smoothing factor equivalent to an ``n``-sample SMA."""
    if int(n) != n or n < 1:
        raise ValueError(f"window must be a positive integer, got {n!r}")
    return (n - 1) / n


class Ewma:
    """Streaming exponentially weighted moving average.

    Parameters
    ----------
    alpha : float
        Weight of the previous output, in ``[0, 1)``.
    initial : float
        Output before the first sample (``e[-1]``).
    """

    __slots__ = ("alpha", "last_output")

    def __init__(self, alpha, initial=0.0):
        _check_alpha(alpha)
        _check_finite(initial)
        self.alpha = float(alpha)
        self.last_output = float(initial)

    def step(self, x):
        x = float(x)
        _check_finite(x)
        self.last_output = self.alpha * self.last_output + (1.0 - self.alpha) * x
        return self.last_output

    def process(self, x):
        """Filter a block, continuing from the current state."""
        x = np.asarray(x, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite input sample in block")
        out = _kernels.ewma_filter(x, self.alpha, self.last_output)
        if out.size:
            self.last_output = float(out[-1])
        return out

    @property
    def nbytes(self):
        # two doubles: alpha and the previous output
        return 16


class Sma:
    """Streaming simple moving average over the last ``n`` samples.

    Before the window fills, the mean is taken over the samples seen so far.
    """

    def __init__(self, n):
        if int(n) != n or n < 1:
            raise ValueError(f"window must be a positive integer, got {n!r}")
        self.window_n = int(n)
        self._buf = np.zeros(self.window_n)
        self._pos = 0
        self._count = 0
        self.running_sum = 0.0

    def step(self, x):
        x = float(x)
        _check_finite(x)
        if self._count >= self.window_n:
            self.running_sum -= self._buf[self._pos]
        else:
            self._count += 1
        self.running_sum += x
        self._buf[self._pos] = x
        self._pos += 1
        if self._pos == self.window_n:
            self._pos = 0
        return self.running_sum / self._count

    @property
    def buffer(self):
        """Samples currently inside the window, oldest first."""
        if self._count < self.window_n:
            return self._buf[: self._count].copy()
        return np.roll(self._buf, -self._pos)

    @property
    def nbytes(self):
        return self._buf.nbytes + 24


def ewma_filter(x, alpha, initial=0.0):
    """Batch EWMA over ``x`` from state ``initial``."""
    _check_alpha(alpha)
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input sample")
    return _kernels.ewma_filter(x, float(alpha), float(initial))


def sma_filter(x, n):
    """Batch causal SMA with the same warm-up rule as :class:`Sma`."""
    if int(n) != n or n < 1:
        raise ValueError(f"window must be a positive integer, got {n!r}")
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input sample")
    return _kernels.sma_filter(x, int(n))


@dataclass(frozen=True)
class BandpassSpec:
    """Butterworth bandpass configuration.

    ``order`` is the order of the lowpass prototype; the bandpass has
    ``2 * order`` poles.
    """

    low_cut_hz: float = 0.5
    high_cut_hz: float = 8.0
    order: int = 2
    mode: FilterMode = FilterMode.ZERO_PHASE

    def __post_init__(self):
        object.__setattr__(self, "mode", FilterMode(self.mode))
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"order must be a positive integer, got {self.order!r}")
        if not (0 < self.low_cut_hz < self.high_cut_hz):
            raise ValueError("need 0 < low_cut_hz < high_cut_hz")

    def validate_for(self, rate):
        if not self.high_cut_hz < rate / 2:
            raise ValueError(
                f"high cutoff {self.high_cut_hz} Hz is not below Nyquist ({rate / 2} Hz)"
            )

    def to_dict(self):
        return {
            "low_cut_hz": self.low_cut_hz,
            "high_cut_hz": self.high_cut_hz,
            "order": self.order,
            "mode": self.mode.value,
        }


def design_bandpass(spec, rate):
    """Second-order sections of a Butterworth bandpass at sample rate ``rate``.

    The analog prototype is prewarped and mapped with the bilinear transform,
    so the -3 dB points land on the requested cutoffs.
    """
    spec.validate_for(rate)
    return sps.butter(
        spec.order,
        [spec.low_cut_hz, spec.high_cut_hz],
        btype="bandpass",
        fs=rate,
        output="sos",
    )


def _default_padlen(sos):
    # three times the cascade order; trailing zero coefficients do not count
    n_sections = sos.shape[0]
    zeros = min((sos[:, 2] == 0).sum(), (sos[:, 5] == 0).sum())
    return 3 * (2 * n_sections - zeros)


def filter_batch(sos, x, mode=FilterMode.ZERO_PHASE):
    """Apply a designed SOS cascade to a whole signal.

    Causal mode runs one forward pass from zero state. Zero-phase mode
    filters forward then backward over an odd-reflection-extended signal and
    trims the extension, so the output has no phase delay.
    """
    mode = FilterMode(mode)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("signal must be a non-empty 1-D array")
    if mode is FilterMode.CAUSAL:
        return sps.sosfilt(sos, x)
    padlen = min(_default_padlen(sos), x.size - 1)
    if padlen < 1:
        return sps.sosfilt(sos, x)
    # forward-backward filtering ignores a constant offset; removing one
    # exactly makes flat input come out as exact zeros and keeps a large DC
    # level from eating into the precision of the pulses
    return sps.sosfiltfilt(sos, x - x[0], padtype="odd", padlen=padlen)


def bandpass(x, rate, spec=None):
    """Design and apply ``spec`` (default 0.5-8 Hz, order 2, zero-phase)."""
    spec = spec or BandpassSpec()
    return filter_batch(design_bandpass(spec, rate), x, spec.mode)
