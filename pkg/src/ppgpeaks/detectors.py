"""Registry tying each detector to its parameters and default search space."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

from . import srmac, terma
from .optimize import Bound, SearchSpace


class DetectorKind(str, enum.Enum):
    SRMAC = "srmac"
    TERMA = "terma"


def srmac_space(alpha_low=0.7, threshold_high=5e-4):
    """Alphas on [alpha_low, 1), threshold on [0, threshold_high)."""
    return SearchSpace(
        (
            Bound("alpha_fast", alpha_low, 1.0),
            Bound("alpha_slow", alpha_low, 1.0),
            Bound("alpha_cross", alpha_low, 1.0),
            Bound("threshold", 0.0, threshold_high),
        ),
        points_per_dim=11,
    )


def terma_space():
    """W1 in [51, 111] ms, W2 in [545, 695] ms, beta in [0, 0.1]."""
    return SearchSpace(
        (
            Bound("w1_ms", 51.0, 111.0, high_inclusive=True),
            Bound("w2_ms", 545.0, 695.0, high_inclusive=True),
            Bound("beta", 0.0, 0.1, high_inclusive=True),
        ),
        points_per_dim=11,
    )


@dataclass(frozen=True)
class Detector:
    kind: DetectorKind
    params_cls: type
    prepare: Callable
    detect_indices: Callable
    default_space: Callable
    trace: Callable

    @property
    def name(self):
        return self.kind.value

    def params_from_vector(self, vector):
        return self.params_cls.from_vector(vector)


_REGISTRY = {
    DetectorKind.SRMAC: Detector(
        DetectorKind.SRMAC,
        srmac.SrmacParams,
        srmac.prepare,
        srmac.detect_indices,
        srmac_space,
        srmac.srmac_trace,
    ),
    DetectorKind.TERMA: Detector(
        DetectorKind.TERMA,
        terma.TermaParams,
        terma.prepare,
        terma.detect_indices,
        terma_space,
        terma.terma_trace,
    ),
}


def get_detector(kind):
    if isinstance(kind, Detector):
        return kind
    return _REGISTRY[DetectorKind(kind)]
