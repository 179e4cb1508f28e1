"""Command-line interface.

Subcommands::

    ppgpeaks detect     detect peaks in a signal CSV or a synthetic record
    ppgpeaks evaluate   score detections against annotations
    ppgpeaks optimize   tune detector parameters on a dataset
    ppgpeaks crossval   leave-subject-out cross-validation with report files
    ppgpeaks synth      write a synthetic dataset in the on-disk layout

``PPGPEAKS_DATASET`` supplies the dataset root when none is given.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import dataset_io
from .crossval import SearchConfig, run_lsocv
from .detectors import DetectorKind, get_detector
from .filters import BandpassSpec, FilterMode
from .metrics import compute_metrics, match_peaks
from .optimize import Fitness, RecordScorer, grid_search, random_search, write_history_csv
from .signal_model import PeakList, Phase, PpgRecord, index_to_time

log = logging.getLogger("ppgpeaks")

DATASET_ENV = "PPGPEAKS_DATASET"


class CliError(Exception):
    pass


def _add_bandpass_args(p):
    g = p.add_argument_group("bandpass")
    g.add_argument("--bandpass-mode", choices=[m.value for m in FilterMode], default="zero-phase")
    g.add_argument("--low-hz", type=float, default=0.5)
    g.add_argument("--high-hz", type=float, default=8.0)
    g.add_argument("--order", type=int, default=2, help="lowpass prototype order")


def _bandpass(args):
    return BandpassSpec(args.low_hz, args.high_hz, args.order, FilterMode(args.bandpass_mode))


def _add_synth_args(p):
    g = p.add_argument_group("synthetic record")
    g.add_argument("--synth", action="store_true", help="use a synthetic record instead of a file")
    g.add_argument("--synth-hr", type=float, default=75.0, help="heart rate (bpm)")
    g.add_argument("--synth-duration", type=float, default=60.0, help="seconds")
    g.add_argument("--synth-noise", type=float, default=0.0, help="noise std (signal units)")
    g.add_argument("--synth-seed", type=int, default=0)
    g.add_argument("--synth-annotations", type=Path, help="write ground-truth peak times here")


def _add_dataset_args(p):
    p.add_argument("dataset", nargs="?", type=Path, help=f"dataset root (default ${DATASET_ENV})")
    p.add_argument("--synth-suite", type=int, metavar="N", help="use N synthetic subjects instead")
    p.add_argument("--synth-clean", action="store_true", help="synthetic suite without artifacts")
    p.add_argument("--synth-rest-only", action="store_true", help="one resting record per subject")
    p.add_argument("--synth-seed", type=int, default=0)
    p.add_argument("--fs", type=float, default=dataset_io.DEFAULT_RATE_HZ, help="sample rate (Hz)")


def _add_search_args(p):
    p.add_argument("--detector", choices=[d.value for d in DetectorKind], default="srmac")
    p.add_argument("--search", choices=["random", "grid"], default="random")
    p.add_argument("--budget", type=int, default=300, help="OFE per random search")
    p.add_argument("--points-per-dim", type=int, default=11)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold-high", type=float, default=5e-4, help="SRMAC threshold upper bound")
    p.add_argument("--tol", type=float, default=0.1, help="matching tolerance (s)")
    _add_bandpass_args(p)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0)
    parser = argparse.ArgumentParser(prog="ppgpeaks", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", parents=[common], help="detect systolic peaks")
    p.add_argument("input", nargs="?", type=Path, help="signal CSV (one sample per line)")
    p.add_argument("--fs", type=float, default=dataset_io.DEFAULT_RATE_HZ, help="sample rate (Hz)")
    p.add_argument("--column", type=int, default=0, help="CSV column holding the signal")
    p.add_argument("--detector", choices=[d.value for d in DetectorKind], default="srmac")
    p.add_argument("--alpha-fast", type=float, default=0.8)
    p.add_argument("--alpha-slow", type=float, default=0.95)
    p.add_argument("--alpha-cross", type=float, default=0.9)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--w1-ms", type=float, default=111.0)
    p.add_argument("--w2-ms", type=float, default=667.0)
    p.add_argument("--beta", type=float, default=0.02)
    p.add_argument("--params", type=Path, help="JSON file of parameters (overrides flags)")
    p.add_argument("--units", choices=["seconds", "samples"], default="seconds")
    p.add_argument("--output", type=Path, help="write peaks here instead of stdout")
    p.add_argument("--trace", type=Path, help="write per-sample internal signals as CSV")
    _add_bandpass_args(p)
    _add_synth_args(p)

    p = sub.add_parser("evaluate", parents=[common], help="score detections against annotations")
    p.add_argument("detections", type=Path)
    p.add_argument("annotations", type=Path)
    p.add_argument("--tol", type=float, default=0.1, help="matching tolerance (s)")
    p.add_argument("--units", choices=["seconds", "samples"], default="seconds")
    p.add_argument("--detections-units", choices=["seconds", "samples"])
    p.add_argument("--annotations-units", choices=["seconds", "samples"])
    p.add_argument("--fs", type=float, default=dataset_io.DEFAULT_RATE_HZ)
    p.add_argument("--json", type=Path, help="write metrics JSON here ('-' for stdout)")

    p = sub.add_parser("optimize", parents=[common], help="tune parameters on a whole dataset")
    _add_dataset_args(p)
    _add_search_args(p)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("crossval", parents=[common], help="leave-subject-out cross-validation")
    _add_dataset_args(p)
    _add_search_args(p)
    p.add_argument("--runs", type=int, default=30, help="repetitions of random search")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--histories", action="store_true", help="also write per-cell search histories")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("synth", parents=[common], help="write a synthetic dataset")
    p.add_argument("out", type=Path)
    p.add_argument("--subjects", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=60.0)
    p.add_argument("--clean", action="store_true")
    return parser


# --------------------------------------------------------------------------


def _detector_params(args):
    if args.params:
        try:
            values = json.loads(args.params.read_text())
        except FileNotFoundError:
            raise CliError(f"parameter file not found: {args.params}") from None
        det = get_detector(args.detector)
        return det.params_cls(**values)
    if args.detector == DetectorKind.SRMAC.value:
        from .srmac import SrmacParams

        return SrmacParams(args.alpha_fast, args.alpha_slow, args.alpha_cross, args.threshold)
    from .terma import TermaParams

    return TermaParams(args.w1_ms, args.w2_ms, args.beta)


def _read_peaks(path, units, fs):
    if not path.is_file():
        raise CliError(f"file not found: {path}")
    if units == "samples":
        return PeakList.from_indices(dataset_io.read_annotation_csv(path), fs)
    return PeakList(dataset_io.read_signal_csv(path))


def _write_lines(values, path):
    text = "".join(f"{v}\n" for v in values)
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def cmd_detect(args):
    if args.synth:
        cfg = dataset_io.SynthConfig(
            duration_s=args.synth_duration,
            sample_rate_hz=args.fs,
            heart_rate_bpm=args.synth_hr,
            noise_std=args.synth_noise,
            seed=args.synth_seed,
        )
        record, truth = dataset_io.synth_record(cfg)
        if args.synth_annotations:
            _write_lines((repr(t) for t in truth.times_s.tolist()), args.synth_annotations)
    elif args.input is None:
        raise CliError("give an input CSV or --synth")
    else:
        if not args.input.is_file():
            raise CliError(f"file not found: {args.input}")
        record = PpgRecord(dataset_io.read_signal_csv(args.input, args.column), args.fs)

    det = get_detector(args.detector)
    params = _detector_params(args)
    spec = _bandpass(args)
    if len(record) < 2:
        idx = np.empty(0, dtype=np.int64)
        prepared = None
    else:
        prepared = det.prepare(record, spec)
        idx = det.detect_indices(params, prepared)

    if args.units == "samples":
        _write_lines((int(i) for i in idx), args.output)
    else:
        _write_lines((repr(t) for t in index_to_time(idx, record.sample_rate_hz).tolist()), args.output)

    if args.trace:
        if prepared is None:
            raise CliError("record too short to trace")
        trace = det.trace(params, prepared)
        names = list(trace)
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", *names])
            cols = [np.asarray(trace[k]) for k in names]
            for i in range(len(record)):
                w.writerow([i, *(repr(float(c[i])) for c in cols)])
    log.info("%d peaks detected", len(idx))
    return 0


def metrics_document(counts, tol_s):
    m = compute_metrics(counts)
    return {"tolerance_s": tol_s, **counts.to_dict(), **m.to_dict()}


def cmd_evaluate(args):
    det = _read_peaks(args.detections, args.detections_units or args.units, args.fs)
    ann = _read_peaks(args.annotations, args.annotations_units or args.units, args.fs)
    counts = match_peaks(det, ann, args.tol)
    doc = metrics_document(counts, args.tol)
    print(f"{'TP':>6} {'FP':>6} {'FN':>6} {'Pp':>9} {'SE':>9} {'accuracy':>9}")
    print(
        f"{counts.tp:>6} {counts.fp:>6} {counts.fn:>6} "
        f"{doc['precision']:>9.5f} {doc['recall']:>9.5f} {doc['accuracy']:>9.5f}"
    )
    if args.json is not None:
        text = json.dumps(doc, indent=2) + "\n"
        if str(args.json) == "-":
            sys.stdout.write(text)
        else:
            args.json.write_text(text)
    return 0


def _load_cli_dataset(args):
    if args.synth_suite:
        phases = (Phase.REST,) if args.synth_rest_only else tuple(Phase)
        return dataset_io.synth_suite(
            args.synth_suite, seed=args.synth_seed, phases=phases, clean=args.synth_clean
        )
    root = args.dataset or os.environ.get(DATASET_ENV)
    if not root:
        raise CliError(f"give a dataset root, --synth-suite, or set ${DATASET_ENV}")
    root = Path(root)
    if not root.is_dir():
        raise CliError(f"dataset root not found: {root}")
    dataset = dataset_io.load_dataset(root, args.fs)
    if not dataset:
        raise CliError(f"no records under {root}")
    return dataset


def _search_space(args, det):
    if det.kind is DetectorKind.SRMAC:
        from .detectors import srmac_space

        return srmac_space(threshold_high=args.threshold_high)
    return det.default_space()


def cmd_optimize(args):
    dataset = _load_cli_dataset(args)
    det = get_detector(args.detector)
    space = _search_space(args, det)
    scorer = RecordScorer(det, dataset, _bandpass(args), args.tol)
    fitness = Fitness(scorer, range(len(dataset)))
    if args.search == "grid":
        result = grid_search(space.with_points(args.points_per_dim), fitness)
    else:
        result = random_search(space, args.budget, args.seed, fitness)
    args.out.mkdir(parents=True, exist_ok=True)
    doc = {
        "detector": det.name,
        "search": args.search,
        "seed": args.seed if args.search == "random" else None,
        "n_evaluations": result.n_evaluations,
        "best_fitness": result.best_fitness,
        "best_params": result.best_dict(),
    }
    (args.out / "best_params.json").write_text(json.dumps(doc, indent=2) + "\n")
    write_history_csv(result, args.out / "history.csv")
    print(json.dumps(doc, indent=2))
    return 0


def cmd_crossval(args):
    dataset = _load_cli_dataset(args)
    det = get_detector(args.detector)
    config = SearchConfig(
        method=args.search,
        budget=args.budget,
        points_per_dim=args.points_per_dim,
        space=_search_space(args, det),
        bandpass=_bandpass(args),
        tol_s=args.tol,
    )
    report = run_lsocv(dataset, det, config, runs=args.runs, base_seed=args.seed, n_jobs=args.jobs)
    for c in report.cells:
        log.info(
            "fold %d (%s) run %d: %d evaluations, train accuracy %.5f",
            c.fold_index, c.subject_id, c.run, c.n_evaluations, c.train_fitness,
        )
    paths = report.write(args.out)
    if args.histories:
        report.write_histories(args.out / "histories")
    print(f"{'group':<10} {'precision':>10} {'recall':>10} {'accuracy':>10}")
    for name, s in report.group_summaries().items():
        print(f"{name:<10} {s.precision:>10.5f} {s.recall:>10.5f} {s.accuracy:>10.5f}")
    for name, s in report.phase_breakdown().items():
        print(f"{name:<10} {s.precision:>10.5f} {s.recall:>10.5f} {s.accuracy:>10.5f}")
    print(f"report written to {paths['report']}")
    return 0


def cmd_synth(args):
    dataset = dataset_io.synth_suite(
        args.subjects, seed=args.seed, duration_s=args.duration, clean=args.clean
    )
    dataset_io.save_dataset(dataset, args.out)
    s = dataset_io.dataset_summary(dataset)
    print(f"wrote {s['records']} records ({s['subjects']} subjects, {s['peaks']} peaks) to {args.out}")
    return 0


COMMANDS = {
    "detect": cmd_detect,
    "evaluate": cmd_evaluate,
    "optimize": cmd_optimize,
    "crossval": cmd_crossval,
    "synth": cmd_synth,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (CliError, ValueError, OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
