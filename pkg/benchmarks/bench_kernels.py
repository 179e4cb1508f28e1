"""Compare the compiled and pure-Python kernels.

Usage: python benchmarks/bench_kernels.py [--minutes 1] [--repeats 21]

Times each hot kernel on a synthetic record with both backends, checks the
outputs agree bit for bit and prints the median wall time per call.
"""

import argparse
import statistics
import time

import numpy as np

from ppgpeaks import _kernels, _pykernels
from ppgpeaks.dataset_io import SynthConfig, synth_record
from ppgpeaks.srmac import prepare
from ppgpeaks.terma import prepare as terma_prepare


def median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def cases(x, z, annotated):
    above = z > np.mean(z)
    detected = annotated + np.random.default_rng(0).normal(0, 0.02, annotated.size)
    detected.sort()
    return {
        "ewma_filter": lambda m: m.ewma_filter(x, 0.95, 0.0),
        "sma_filter": lambda m: m.sma_filter(z, 133),
        "srmac_scan": lambda m: m.srmac_scan(x, 0.8, 0.95, 0.9, 1e-4, _pykernels.new_srmac_state()),
        "segment_argmax": lambda m: m.segment_argmax(above, x, 22),
        "match_events": lambda m: m.match_events(detected, annotated, 0.1),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--minutes", type=float, default=1.0, help="record length")
    ap.add_argument("--repeats", type=int, default=21)
    args = ap.parse_args(argv)

    rec, peaks = synth_record(SynthConfig(duration_s=60.0 * args.minutes, noise_std=1e-4))
    x = prepare(rec)
    z = terma_prepare(rec).z
    annotated = np.asarray(peaks.times_s)
    backends = _kernels.backends()
    print(f"{x.size} samples; backends: {', '.join(sorted(backends))} (active: {_kernels.BACKEND})")
    header = f"{'kernel':<16}" + "".join(f"{name + ' (ms)':>16}" for name in sorted(backends))
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    for name, fn in cases(x, z, annotated).items():
        row = f"{name:<16}"
        timings = {}
        outputs = {}
        for b in sorted(backends):
            timings[b], outputs[b] = median_time(lambda: fn(backends[b]), args.repeats)
            row += f"{timings[b] * 1e3:>16.3f}"
        if len(backends) > 1:
            a, c = (outputs[b] for b in sorted(backends))
            same = all(np.array_equal(u, v) for u, v in zip(a, c)) if isinstance(a, tuple) else np.array_equal(a, c)
            if not same:
                raise SystemExit(f"{name}: backends disagree")
            row += f"{timings['python'] / timings['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
