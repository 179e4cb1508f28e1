"""Leave-subject-out cross-validation (LSOCV).

Each fold holds out every record of one subject. For random search the
search is repeated ``runs`` times per fold with seeds derived from
``(base_seed, fold_index, run_index)``; grid search is deterministic and runs
once. Validation counts are stored per record so that group, phase and
best-so-far (OFE) summaries are all computed from the same cells.

Aggregation conventions (also written into the report metadata):

* a cell's validation metrics pool the counts over the held-out subject's
  records;
* per-subject metrics average the cells over runs;
* group and overall rows average per-subject metrics, with sample standard
  deviations across subjects;
* phase rows pool, for each run, the counts of every held-out record in that
  phase, then average over runs with the standard deviation across runs;
* accuracy in every summary row is the mean of the mean precision and the
  mean recall.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .detectors import get_detector
from .filters import BandpassSpec
from .metrics import (
    DEFAULT_TOLERANCE_S,
    ConfusionCounts,
    compute_metrics,
    pooled_metrics,
    summarize,
)
from .optimize import Fitness, RecordScorer, grid_search, random_search
from .signal_model import Group, Phase

log = logging.getLogger(__name__)

DEFAULT_CHECKPOINTS = (50, 100, 150, 200, 250, 300)
STD_DDOF = 1
SEED_DERIVATION = "numpy.random.SeedSequence(entropy=base_seed, spawn_key=(fold_index, run_index))"


@dataclass(frozen=True)
class Fold:
    index: int
    held_out_subject: str
    train_indices: tuple
    validation_indices: tuple

    def train_records(self, dataset):
        return [dataset[i] for i in self.train_indices]

    def validation_records(self, dataset):
        return [dataset[i] for i in self.validation_indices]


def make_folds(dataset):
    """One fold per distinct subject id, in sorted id order."""
    subjects = sorted({rec.subject_id for rec, _ in dataset})
    if len(subjects) < 2:
        raise ValueError(f"LSOCV needs at least two subjects, found {len(subjects)}")
    folds = []
    for k, subject in enumerate(subjects):
        val = tuple(i for i, (rec, _) in enumerate(dataset) if rec.subject_id == subject)
        train = tuple(i for i, (rec, _) in enumerate(dataset) if rec.subject_id != subject)
        folds.append(Fold(k, subject, train, val))
    return folds


def check_no_leakage(folds, dataset):
    for fold in folds:
        train_ids = {dataset[i][0].subject_id for i in fold.train_indices}
        val_ids = {dataset[i][0].subject_id for i in fold.validation_indices}
        if train_ids & val_ids or val_ids != {fold.held_out_subject}:
            raise AssertionError(f"fold {fold.index} leaks subject data")


def cell_seed(base_seed, fold_index, run_index):
    return np.random.SeedSequence(entropy=base_seed, spawn_key=(fold_index, run_index))


@dataclass(frozen=True)
class SearchConfig:
    """How each fold is optimized.

    ``method`` is ``"random"`` or ``"grid"``. ``space`` defaults to the
    detector's standard search space.
    """

    method: str = "random"
    budget: int = 300
    points_per_dim: int = 11
    space: object = None
    bandpass: BandpassSpec = field(default_factory=BandpassSpec)
    tol_s: float = DEFAULT_TOLERANCE_S
    checkpoints: tuple = DEFAULT_CHECKPOINTS

    def __post_init__(self):
        if self.method not in ("random", "grid"):
            raise ValueError(f"unknown search method {self.method!r}")
        if self.budget < 1:
            raise ValueError("budget must be at least 1")

    def resolve_space(self, detector):
        space = self.space or detector.default_space()
        if self.method == "grid":
            space = space.with_points(self.points_per_dim)
        return space

    def effective_checkpoints(self):
        if self.method != "random":
            return ()
        cps = tuple(c for c in self.checkpoints if 1 <= c <= self.budget)
        return cps or (self.budget,)


@dataclass
class CellResult:
    fold_index: int
    subject_id: str
    run: int
    best_params: dict
    train_fitness: float
    n_evaluations: int
    validation: dict  # dataset index -> ConfusionCounts
    checkpoints: list  # (ofe, train_best, pooled validation ConfusionCounts)
    search: object = None

    @property
    def validation_counts(self):
        total = ConfusionCounts()
        for c in self.validation.values():
            total = total + c
        return total


def _run_cell(scorer, fold, run, config, space, base_seed):
    fitness = Fitness(scorer, fold.train_indices)
    if config.method == "random":
        result = random_search(space, config.budget, cell_seed(base_seed, fold.index, run), fitness)
    else:
        result = grid_search(space, fitness)
    validation = {i: scorer.counts(result.best_params, i) for i in fold.validation_indices}
    checkpoints = []
    for c in config.effective_checkpoints():
        best = result.best_at(c)
        val = scorer.pooled(best.params, fold.validation_indices)
        checkpoints.append((c, best.fitness, val))
    return CellResult(
        fold.index,
        fold.held_out_subject,
        run,
        result.best_dict(),
        result.best_fitness,
        result.n_evaluations,
        validation,
        checkpoints,
        result,
    )


_WORKER = {}


def _init_worker(scorer):
    _WORKER["scorer"] = scorer


def _worker_cell(args):
    fold, run, config, space, base_seed = args
    return _run_cell(_WORKER["scorer"], fold, run, config, space, base_seed)


def run_lsocv(dataset, detector, config=None, runs=30, base_seed=0, n_jobs=1, keep_history=True):
    """Cross-validate ``detector`` on ``dataset`` and return a :class:`CvReport`.

    Any failing cell aborts the whole run.
    """
    config = config or SearchConfig()
    det = get_detector(detector)
    dataset = list(dataset)
    folds = make_folds(dataset)
    check_no_leakage(folds, dataset)
    if config.method == "grid" and runs != 1:
        log.info("grid search is deterministic; using one run instead of %d", runs)
        runs = 1
    if runs < 1:
        raise ValueError("runs must be at least 1")
    space = config.resolve_space(det)
    scorer = RecordScorer(det, dataset, config.bandpass, config.tol_s, cache=config.method == "grid")
    jobs = [(fold, run, config, space, base_seed) for fold in folds for run in range(runs)]
    if n_jobs == 1:
        cells = [_run_cell(scorer, *job) for job in jobs]
    else:
        with ProcessPoolExecutor(n_jobs, initializer=_init_worker, initargs=(scorer,)) as pool:
            cells = list(pool.map(_worker_cell, jobs))
    cells.sort(key=lambda c: (c.fold_index, c.run))
    if not keep_history:
        for c in cells:
            c.search = None
    return CvReport(det.name, config, space, runs, base_seed, dataset, folds, cells)


def _summary_dict(summary):
    d = summary.to_dict()
    return {k: d[k] for k in ("precision", "precision_std", "recall", "recall_std", "accuracy", "n")}


class CvReport:
    """Results of one LSOCV experiment with group, phase and OFE summaries."""

    def __init__(self, detector, config, space, runs, base_seed, dataset, folds, cells):
        self.detector = detector
        self.config = config
        self.space = space
        self.runs = runs
        self.base_seed = base_seed
        self.folds = folds
        self.cells = cells
        self._records = [
            (rec.subject_id, rec.group, rec.phase, len(peaks)) for rec, peaks in dataset
        ]
        self._subject_group = {}
        for sid, group, _, _ in self._records:
            self._subject_group.setdefault(sid, group)

    # -- per-subject -------------------------------------------------------

    def _cells_of(self, fold_index):
        return [c for c in self.cells if c.fold_index == fold_index]

    def subject_metrics(self):
        """``{subject_id: MetricsSummary over runs}`` in fold order."""
        out = {}
        for fold in self.folds:
            ms = [compute_metrics(c.validation_counts) for c in self._cells_of(fold.index)]
            out[fold.held_out_subject] = summarize(ms, ddof=STD_DDOF)
        return out

    def group_summaries(self):
        """Per-group and overall rows: mean and spread across subjects."""
        per_subject = self.subject_metrics()
        rows = {}
        for group in Group:
            ms = [s for sid, s in per_subject.items() if self._subject_group[sid] is group]
            if ms:
                rows[group.value] = summarize(ms, ddof=STD_DDOF)
        rows["overall"] = summarize(per_subject.values(), ddof=STD_DDOF)
        return rows

    def phase_breakdown(self):
        """Per-phase rows: counts pooled over subjects, spread across runs."""
        phases_present = [p for p in Phase if any(r[2] is p for r in self._records)]
        rows = {}
        for phase in phases_present:
            per_run = []
            for run in range(self.runs):
                total = ConfusionCounts()
                for c in self.cells:
                    if c.run != run:
                        continue
                    for i, counts in c.validation.items():
                        if self._records[i][2] is phase:
                            total = total + counts
                per_run.append(compute_metrics(total))
            rows[phase.value] = summarize(per_run, ddof=STD_DDOF)
        return rows

    def ofe_curve(self):
        """Validation accuracy of the best-so-far parameters at each OFE checkpoint."""
        cps = self.config.effective_checkpoints()
        curve = []
        for k, ofe in enumerate(cps):
            subject_ms = []
            train = []
            for fold in self.folds:
                cells = self._cells_of(fold.index)
                subject_ms.append(
                    summarize([compute_metrics(c.checkpoints[k][2]) for c in cells], ddof=STD_DDOF)
                )
                train.extend(c.checkpoints[k][1] for c in cells)
            overall = summarize(subject_ms, ddof=STD_DDOF)
            curve.append(
                {
                    "ofe": ofe,
                    "validation_accuracy": overall.accuracy,
                    "validation_precision": overall.precision,
                    "validation_recall": overall.recall,
                    "train_accuracy": float(np.mean(train)),
                }
            )
        return curve

    def pooled(self):
        return pooled_metrics(c.validation_counts for c in self.cells)

    def overall_accuracy(self):
        return self.group_summaries()["overall"].accuracy

    # -- serialization -------------------------------------------------------

    def metadata(self):
        cfg = self.config
        return {
            "detector": self.detector,
            "search": cfg.method,
            "runs": self.runs,
            "budget": cfg.budget if cfg.method == "random" else None,
            "points_per_dim": cfg.points_per_dim if cfg.method == "grid" else None,
            "evaluations_per_search": self.cells[0].n_evaluations if self.cells else 0,
            "checkpoints": list(cfg.effective_checkpoints()),
            "base_seed": self.base_seed,
            "seed_derivation": SEED_DERIVATION,
            "tolerance_s": cfg.tol_s,
            "bandpass": cfg.bandpass.to_dict(),
            "search_space": self.space.to_dict(),
            "n_folds": len(self.folds),
            "n_records": len(self._records),
            "n_annotated_peaks": sum(r[3] for r in self._records),
            "std": f"sample standard deviation (ddof={STD_DDOF}); null when undefined",
            "aggregation": {
                "cell": "counts pooled over the held-out subject's records",
                "subject": "mean over runs",
                "group": "mean of per-subject metrics; std across subjects",
                "phase": "counts pooled over subjects per run; mean and std across runs",
                "accuracy": "mean of mean precision and mean recall",
                "fitness": "accuracy of counts pooled over training records",
            },
        }

    def to_dict(self):
        folds = []
        subj = self.subject_metrics()
        for fold in self.folds:
            runs = []
            for c in self._cells_of(fold.index):
                m = compute_metrics(c.validation_counts)
                runs.append(
                    {
                        "run": c.run,
                        "best_params": c.best_params,
                        "train_fitness": c.train_fitness,
                        "n_evaluations": c.n_evaluations,
                        "validation": {**c.validation_counts.to_dict(), **m.to_dict()},
                        "records": [
                            {"index": i, "phase": self._records[i][2].value, **counts.to_dict()}
                            for i, counts in sorted(c.validation.items())
                        ],
                        "checkpoints": [
                            {
                                "ofe": ofe,
                                "train_best": tb,
                                "validation": {**v.to_dict(), **compute_metrics(v).to_dict()},
                            }
                            for ofe, tb, v in c.checkpoints
                        ],
                    }
                )
            folds.append(
                {
                    "fold": fold.index,
                    "subject_id": fold.held_out_subject,
                    "group": self._subject_group[fold.held_out_subject].value,
                    "summary": _summary_dict(subj[fold.held_out_subject]),
                    "runs": runs,
                }
            )
        pooled_counts = ConfusionCounts()
        for c in self.cells:
            pooled_counts = pooled_counts + c.validation_counts
        return {
            "metadata": self.metadata(),
            "groups": {k: _summary_dict(v) for k, v in self.group_summaries().items()},
            "phases": {k: _summary_dict(v) for k, v in self.phase_breakdown().items()},
            "ofe_curve": self.ofe_curve(),
            "pooled": {**pooled_counts.to_dict(), **compute_metrics(pooled_counts).to_dict()},
            "folds": folds,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def write(self, out_dir):
        """Write report.json plus CSV tables; returns the written paths."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"report": out / "report.json"}
        paths["report"].write_text(self.to_json())

        cols = ["precision", "precision_std", "recall", "recall_std", "accuracy", "n"]

        def fmt(v):
            return "" if v is None else repr(v)

        paths["groups"] = out / "table_groups.csv"
        with open(paths["groups"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["model", "group", *cols])
            for name, s in self.group_summaries().items():
                d = _summary_dict(s)
                w.writerow([self.detector, name, *(fmt(d[c]) for c in cols)])

        paths["phases"] = out / "table_phases.csv"
        with open(paths["phases"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["model", "phase", *cols])
            for name, s in self.phase_breakdown().items():
                d = _summary_dict(s)
                w.writerow([self.detector, name, *(fmt(d[c]) for c in cols)])

        paths["ofe"] = out / "table_ofe.csv"
        with open(paths["ofe"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["ofe", "validation_accuracy", "validation_precision", "validation_recall", "train_accuracy"])
            for row in self.ofe_curve():
                w.writerow([row["ofe"], *(repr(row[k]) for k in list(row)[1:])])

        paths["subjects"] = out / "table_subjects.csv"
        with open(paths["subjects"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["model", "subject_id", "group", *cols])
            for sid, s in self.subject_metrics().items():
                d = _summary_dict(s)
                w.writerow([self.detector, sid, self._subject_group[sid].value, *(fmt(d[c]) for c in cols)])
        return paths

    def write_histories(self, out_dir):
        """One best-so-far CSV per (fold, run) cell."""
        from .optimize import write_history_csv

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for c in self.cells:
            if c.search is None:
                continue
            p = out / f"history_fold{c.fold_index:02d}_run{c.run:02d}.csv"
            write_history_csv(c.search, p)
            paths.append(p)
        return paths


def phase_breakdown(report):
    """Per-phase validation metrics of a finished report."""
    return report.phase_breakdown()
