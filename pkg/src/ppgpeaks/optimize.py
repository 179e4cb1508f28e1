"""Derivative-free parameter search.

Random search draws candidates uniformly from half-open boxes; grid search
walks the Cartesian product of evenly spaced closed axes. Both record every
objective function evaluation (OFE) so best-so-far curves can be rebuilt
without re-running the search.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .filters import BandpassSpec
from .metrics import DEFAULT_TOLERANCE_S, ConfusionCounts, compute_metrics, match_peaks
from .signal_model import index_to_time


@dataclass(frozen=True)
class Bound:
    name: str
    low: float
    high: float
    high_inclusive: bool = False

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError(f"bound {self.name!r}: low must be below high")

    def contains(self, v):
        if v < self.low:
            return False
        return v <= self.high if self.high_inclusive else v < self.high

    def to_dict(self):
        return {
            "name": self.name,
            "low": self.low,
            "high": self.high,
            "high_inclusive": self.high_inclusive,
        }


@dataclass(frozen=True)
class SearchSpace:
    bounds: tuple
    points_per_dim: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "bounds", tuple(self.bounds))
        if not self.bounds:
            raise ValueError("search space needs at least one dimension")
        if self.points_per_dim is not None and self.points_per_dim < 1:
            raise ValueError("points_per_dim must be positive")

    @property
    def names(self):
        return tuple(b.name for b in self.bounds)

    @property
    def ndim(self):
        return len(self.bounds)

    def with_points(self, points_per_dim):
        return SearchSpace(self.bounds, points_per_dim)

    def sample(self, rng, n):
        """``n`` uniform candidates, shape ``(n, ndim)``.

        Rows are drawn in order, so the first ``k`` rows do not depend on ``n``.
        """
        low = np.array([b.low for b in self.bounds])
        high = np.array([b.high for b in self.bounds])
        cand = rng.uniform(low, high, size=(n, self.ndim))
        # uniform() may round up onto an excluded upper bound
        for j, b in enumerate(self.bounds):
            if not b.high_inclusive:
                col = cand[:, j]
                col[col >= b.high] = np.nextafter(b.high, b.low)
        return cand

    def grid_axes(self):
        if self.points_per_dim is None:
            raise ValueError("grid search needs points_per_dim")
        k = self.points_per_dim
        axes = []
        for b in self.bounds:
            if k == 1:
                axes.append(np.array([b.low]))
            elif b.high_inclusive:
                axes.append(np.linspace(b.low, b.high, k))
            else:
                axes.append(np.linspace(b.low, b.high, k + 1)[:-1])
        return axes

    def grid(self):
        """All grid points in lexicographic order."""
        return [tuple(float(v) for v in p) for p in itertools.product(*self.grid_axes())]

    def to_dict(self):
        return {
            "bounds": [b.to_dict() for b in self.bounds],
            "points_per_dim": self.points_per_dim,
        }


class Evaluation(NamedTuple):
    ofe_index: int
    params: tuple
    fitness: float
    best_so_far: float


@dataclass
class SearchResult:
    names: tuple
    best_params: tuple
    best_fitness: float
    history: list = field(default_factory=list)

    @property
    def n_evaluations(self):
        return len(self.history)

    def best_at(self, ofe):
        """Best candidate among the first ``ofe`` evaluations."""
        if not 1 <= ofe <= len(self.history):
            raise ValueError(f"OFE {ofe} outside 1..{len(self.history)}")
        best = self.history[0]
        for ev in self.history[1:ofe]:
            if ev.fitness > best.fitness:
                best = ev
        return best

    def best_dict(self):
        return dict(zip(self.names, self.best_params))


def _collect(names, candidates, fitnesses):
    history = []
    best_i = 0
    best_f = -np.inf
    for i, (cand, fit) in enumerate(zip(candidates, fitnesses)):
        fit = float(fit)
        if np.isnan(fit):
            raise ValueError(f"fitness is NaN for candidate {i}: {cand}")
        if fit > best_f:
            best_f = fit
            best_i = i
        history.append(Evaluation(i + 1, cand, fit, best_f))
    if not history:
        raise ValueError("search produced no evaluations")
    return SearchResult(tuple(names), history[best_i].params, best_f, history)


def random_search(space, budget_ofe, seed, fitness, map_fn=map):
    """Seeded uniform random search.

    ``fitness`` maps a parameter tuple to a float (higher is better).
    ``map_fn`` may be an ordered parallel map; results are collected by
    candidate index, so the outcome does not depend on scheduling.
    """
    if budget_ofe < 1:
        raise ValueError("budget must be at least 1")
    rng = np.random.default_rng(seed)
    cand = [tuple(float(v) for v in row) for row in space.sample(rng, budget_ofe)]
    return _collect(space.names, cand, list(map_fn(fitness, cand)))


def grid_search(space, fitness, map_fn=map):
    """Exhaustive grid search; ties keep the first point in grid order."""
    cand = space.grid()
    return _collect(space.names, cand, list(map_fn(fitness, cand)))


def write_history_csv(result, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ofe_index", "fitness", "best_so_far", *result.names])
        for ev in result.history:
            w.writerow([ev.ofe_index, repr(ev.fitness), repr(ev.best_so_far), *map(repr, ev.params)])


class RecordScorer:
    """Runs a detector on a fixed set of records and scores each one.

    Records are bandpass-filtered once up front. With ``cache=True`` the
    per-record counts are memoized by parameter vector, which pays off when
    several folds evaluate the same grid.
    """

    def __init__(self, detector, dataset, bandpass=None, tol_s=DEFAULT_TOLERANCE_S, cache=False):
        self.detector = detector
        self.bandpass = bandpass or BandpassSpec()
        self.tol_s = tol_s
        self.rates = [rec.sample_rate_hz for rec, _ in dataset]
        self.annotations = [np.asarray(peaks.times_s) for _, peaks in dataset]
        self.prepared = [
            detector.prepare(rec, self.bandpass) if len(rec) > 1 else None for rec, _ in dataset
        ]
        self._cache = {} if cache else None

    def __len__(self):
        return len(self.prepared)

    def detect(self, params, i):
        prep = self.prepared[i]
        if prep is None:
            return np.empty(0)
        idx = self.detector.detect_indices(params, prep)
        return index_to_time(idx, self.rates[i])

    def counts(self, vector, i):
        key = (tuple(vector), i)
        if self._cache is not None and key in self._cache:
            return self._cache[key]
        params = self.detector.params_from_vector(vector)
        c = match_peaks(self.detect(params, i), self.annotations[i], self.tol_s)
        if self._cache is not None:
            self._cache[key] = c
        return c

    def pooled(self, vector, indices):
        total = ConfusionCounts()
        for i in indices:
            total = total + self.counts(vector, i)
        return total

    def accuracy(self, vector, indices):
        return compute_metrics(self.pooled(vector, indices)).accuracy


class Fitness:
    """Pooled training accuracy of a parameter vector; picklable."""

    def __init__(self, scorer, indices):
        self.scorer = scorer
        self.indices = tuple(indices)
        if not self.indices:
            raise ValueError("training set is empty")

    def __call__(self, vector):
        return self.scorer.accuracy(vector, self.indices)


def evaluate_fitness(params, train, detector, bandpass=None, tol_s=DEFAULT_TOLERANCE_S):
    """Accuracy of ``params`` pooled over ``train`` (record, peaks) pairs."""
    from .detectors import get_detector

    det = get_detector(detector)
    train = list(train)
    scorer = RecordScorer(det, train, bandpass, tol_s)
    vector = params.to_vector() if hasattr(params, "to_vector") else tuple(params)
    return Fitness(scorer, range(len(train)))(vector)
