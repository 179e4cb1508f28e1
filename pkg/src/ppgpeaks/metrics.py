"""Peak matching and detection metrics.

A detection at ``t_pred`` is a true positive when an annotated peak ``t``
satisfies ``|t - t_pred| < tol`` (0.1 s by default) and that annotation has
not already been claimed. Precision is TP / (TP + FP), recall is
TP / (TP + FN), and accuracy is their mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels

DEFAULT_TOLERANCE_S = 0.1
# boundary slack so |dt| == tol computed in floating point never counts as a hit
_BOUNDARY_EPS = 1e-9


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        for name in ("tp", "fp", "fn"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    def __add__(self, other):
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def to_dict(self):
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn}


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    accuracy: float

    def to_dict(self):
        return {"precision": self.precision, "recall": self.recall, "accuracy": self.accuracy}


@dataclass(frozen=True)
class MetricsSummary:
    """Mean and standard deviation of per-item metrics.

    ``accuracy`` is the mean of the two means. Standard deviations use
    ``ddof`` and are ``None`` when fewer than ``ddof + 1`` items exist.
    """

    precision: float
    precision_std: float | None
    recall: float
    recall_std: float | None
    accuracy: float
    n: int
    ddof: int = 1

    def to_dict(self):
        return {
            "precision": self.precision,
            "precision_std": self.precision_std,
            "recall": self.recall,
            "recall_std": self.recall_std,
            "accuracy": self.accuracy,
            "n": self.n,
            "ddof": self.ddof,
        }


class Matching(NamedTuple):
    counts: ConfusionCounts
    detected_index: np.ndarray
    annotated_index: np.ndarray


def _as_times(peaks, label):
    times = np.asarray(getattr(peaks, "times_s", peaks), dtype=np.float64).ravel()
    if np.any(np.diff(times) < 0):
        raise ValueError(f"{label} peak times are not sorted")
    return times


def match_peaks_detailed(detected, annotated, tol_s=DEFAULT_TOLERANCE_S):
    """Match peaks one-to-one and return the pairs along with the counts.

    Detections are visited in time order; each takes the earliest unclaimed
    annotation within tolerance. This yields the maximum number of matched
    pairs, and when peaks are more than ``2 * tol_s`` apart it is the same as
    taking the nearest annotation.
    """
    if not tol_s > 0:
        raise ValueError("tolerance must be positive")
    det = _as_times(detected, "detected")
    ann = _as_times(annotated, "annotated")
    d_idx, a_idx = _kernels.match_events(det, ann, tol_s - _BOUNDARY_EPS)
    tp = len(d_idx)
    counts = ConfusionCounts(tp, len(det) - tp, len(ann) - tp)
    return Matching(counts, d_idx, a_idx)


def match_peaks(detected, annotated, tol_s=DEFAULT_TOLERANCE_S):
    """TP/FP/FN for detected versus annotated peak times (seconds)."""
    return match_peaks_detailed(detected, annotated, tol_s).counts


def is_match(dt, tol_s=DEFAULT_TOLERANCE_S):
    """The pairing predicate used by the matcher."""
    return abs(dt) < tol_s - _BOUNDARY_EPS


def _ratio(tp, other, other_side):
    # empty denominator: perfect unless the other error type is present
    if tp + other == 0:
        return 0.0 if other_side else 1.0
    return tp / (tp + other)


def compute_metrics(c):
    precision = _ratio(c.tp, c.fp, c.fn)
    recall = _ratio(c.tp, c.fn, c.fp)
    return Metrics(precision, recall, (precision + recall) / 2)


def pooled_metrics(per_record):
    """Sum the counts, then compute metrics."""
    per_record = list(per_record)
    if not per_record:
        raise ValueError("need at least one set of counts")
    total = ConfusionCounts()
    for c in per_record:
        total = total + c
    return compute_metrics(total)


def summarize(metrics, ddof=1):
    """Mean/std summary of a sequence of :class:`Metrics`."""
    metrics = list(metrics)
    if not metrics:
        raise ValueError("need at least one set of metrics")
    p = np.array([m.precision for m in metrics])
    r = np.array([m.recall for m in metrics])
    n = len(metrics)

    def std(v):
        if n <= ddof:
            return None
        return float(np.std(v, ddof=ddof))

    p_mean = float(np.mean(p))
    r_mean = float(np.mean(r))
    return MetricsSummary(p_mean, std(p), r_mean, std(r), (p_mean + r_mean) / 2, n, ddof)


def averaged_metrics(per_record, ddof=1):
    """Mean and std of per-record metrics."""
    per_record = list(per_record)
    if not per_record:
        raise ValueError("need at least one set of counts")
    return summarize((compute_metrics(c) for c in per_record), ddof=ddof)


def aggregate_metrics(per_record, mode="pooled", ddof=1):
    """Aggregate per-record counts; ``mode`` is ``"pooled"`` or ``"averaged"``."""
    if mode == "pooled":
        return pooled_metrics(per_record)
    if mode == "averaged":
        return averaged_metrics(per_record, ddof=ddof)
    raise ValueError(f"unknown aggregation mode {mode!r}")


def accuracy(c):
    return compute_metrics(c).accuracy

