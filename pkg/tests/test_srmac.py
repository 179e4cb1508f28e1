import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import TUNED_SRMAC
from ppgpeaks.dataset_io import SynthConfig, synth_record
from ppgpeaks.metrics import match_peaks
from ppgpeaks.signal_model import PpgRecord
from ppgpeaks.srmac import (
    SrmacDetector,
    SrmacParams,
    prepare,
    srmac_detect_batch,
    srmac_scan,
    srmac_trace,
)

TUNED = SrmacParams(*TUNED_SRMAC)


def stream_all(params, x, rate=200.0):
    det = SrmacDetector(params, rate)
    events = [e for e in (det.push(v) for v in x) if e is not None]
    last = det.flush()
    if last is not None:
        events.append(last)
    return events


@pytest.fixture(scope="module")
def filtered_75(clean_75):
    return prepare(clean_75.record)


def test_params_validation():
    with pytest.raises(ValueError):
        SrmacParams(1.0, 0.9, 0.9, 0.0)
    with pytest.raises(ValueError):
        SrmacParams(0.8, -0.1, 0.9, 0.0)
    with pytest.raises(ValueError):
        SrmacParams(0.8, 0.9, 0.9, np.inf)
    # role inversion is allowed
    SrmacParams(0.99, 0.7, 0.8, 1e-4)


def test_params_vector_roundtrip():
    p = SrmacParams(0.71, 0.93, 0.85, 2e-4)
    assert SrmacParams.from_vector(p.to_vector()) == p
    assert p.to_dict() == {"alpha_fast": 0.71, "alpha_slow": 0.93, "alpha_cross": 0.85, "threshold": 2e-4}


def test_huge_threshold_gives_no_events(filtered_75):
    scale = np.max(np.abs(filtered_75))
    params = SrmacParams(0.8, 0.95, 0.9, 1e6 * scale)
    assert stream_all(params, filtered_75) == []
    assert srmac_scan(params, filtered_75)[0].size == 0


def test_zero_stream_gives_no_events():
    assert stream_all(TUNED, np.zeros(5000)) == []


def test_bandpassed_constant_gives_no_events():
    rec = PpgRecord(np.full(12000, 3.1), 200.0)
    assert len(srmac_detect_batch(SrmacParams(0.8, 0.95, 0.9, 0.0), rec)) == 0


def test_raw_constant_leaves_one_start_up_roi():
    # e_fast leads e_slow while both converge to the constant; d decays to 0
    params = SrmacParams(0.8, 0.95, 0.9, 1e-3)
    events = stream_all(params, np.full(5000, 1.0))
    assert len(events) == 1
    assert events[0].roi_start == 0
    assert events[0].roi_end < 500


def test_clean_record_one_event_per_beat(clean_75, filtered_75):
    events = stream_all(TUNED, filtered_75)
    truth = clean_75.peaks.times_s
    assert abs(len(events) - 75) <= 1
    counts = match_peaks([e.time_s for e in events], truth, 0.1)
    assert counts.fp == 0
    assert counts.tp == len(truth)


def test_batch_detect_on_clean_record(clean_75):
    peaks = srmac_detect_batch(TUNED, clean_75.record)
    assert abs(len(peaks) - 75) <= 1
    assert match_peaks(peaks, clean_75.peaks).fn == 0


def test_single_sample_record_is_empty():
    assert len(srmac_detect_batch(TUNED, PpgRecord(np.array([1.0]), 200.0))) == 0


def test_streaming_equals_batch_on_clean_record(filtered_75):
    events = stream_all(TUNED, filtered_75)
    peaks, starts, ends = srmac_scan(TUNED, filtered_75)
    assert [e.index for e in events] == peaks.tolist()
    assert [e.roi_start for e in events] == starts.tolist()
    assert [e.roi_end for e in events] == ends.tolist()
    assert [e.amplitude for e in events] == filtered_75[peaks].tolist()


@given(
    seed=st.integers(0, 2**20),
    cuts=st.lists(st.integers(1, 1999), max_size=6),
    thr=st.floats(-0.2, 0.2),
)
def test_block_processing_equals_push(seed, cuts, thr):
    x = np.random.default_rng(seed).normal(size=2000).cumsum() * 0.1
    params = SrmacParams(0.6, 0.9, 0.7, thr)
    expected = stream_all(params, x)
    det = SrmacDetector(params)
    got = []
    for block in np.split(x, sorted(set(cuts))):
        got.extend(det.process(block))
    tail = det.flush()
    if tail is not None:
        got.append(tail)
    assert got == expected
    assert det.sample_counter == x.size


@given(seed=st.integers(0, 2**20), t1=st.floats(-0.5, 0.5), dt=st.floats(0.0, 0.5))
def test_raising_threshold_nests_rois(seed, t1, dt):
    x = np.random.default_rng(seed).normal(size=1500)
    _, lo_s, lo_e = srmac_scan(SrmacParams(0.5, 0.9, 0.6, t1), x)
    _, hi_s, hi_e = srmac_scan(SrmacParams(0.5, 0.9, 0.6, t1 + dt), x)
    # every ROI at the higher threshold sits inside one at the lower threshold
    k = np.searchsorted(lo_s, hi_s, side="right") - 1
    assert np.all(k >= 0)
    assert np.all(hi_e <= lo_e[k])


def test_raising_threshold_can_split_an_roi():
    # pass-through fast average and a nearly frozen slow one: c follows x
    x = np.concatenate([np.zeros(10), np.ones(5), np.full(5, 0.5), np.ones(5), np.zeros(40)])
    low = srmac_scan(SrmacParams(0.0, 0.99, 0.0, 0.1), x)[0]
    high = srmac_scan(SrmacParams(0.0, 0.99, 0.0, 0.6), x)[0]
    assert (low.size, high.size) == (1, 2)


@pytest.mark.parametrize("seed", range(5))
def test_event_count_monotone_on_ppg(seed):
    rec = synth_record(SynthConfig(seed=seed, heart_rate_bpm=60 + 8 * seed, noise_std=1e-4))
    x = prepare(rec.record)
    counts = [srmac_scan(SrmacParams(0.8, 0.95, 0.9, t), x)[0].size for t in np.linspace(0, 5e-4, 26)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


@given(seed=st.integers(0, 2**20), thr=st.floats(-0.1, 0.1))
def test_peak_lies_inside_roi(seed, thr):
    x = np.random.default_rng(seed).normal(size=1500)
    peaks, starts, ends = srmac_scan(SrmacParams(0.5, 0.9, 0.6, thr), x)
    assert np.all(starts <= peaks)
    assert np.all(peaks < ends)
    assert np.all(starts[1:] >= ends[:-1])
    for p, s, e in zip(peaks, starts, ends):
        # earliest maximum of the input inside the ROI
        assert p == s + int(np.argmax(x[s:e]))


@pytest.mark.parametrize("s", [0.01, 100.0])
def test_scale_covariance(filtered_75, s):
    params = SrmacParams(0.8, 0.95, 0.9, 1e-4)
    base = srmac_scan(params, filtered_75)
    scaled = srmac_scan(params.scaled(s), s * filtered_75)
    for u, v in zip(base, scaled):
        np.testing.assert_array_equal(u, v)


def test_non_finite_sample_leaves_state_untouched():
    det = SrmacDetector(TUNED)
    for v in (0.0, 1.0, 2.0):
        det.push(v)
    before = (det.sample_counter, det.in_roi, det.outputs)
    for bad in (np.nan, np.inf, -np.inf):
        with pytest.raises(ValueError):
            det.push(bad)
    with pytest.raises(ValueError):
        det.process(np.array([1.0, np.nan]))
    assert (det.sample_counter, det.in_roi, det.outputs) == before


def test_sample_counter_and_flush_without_roi():
    det = SrmacDetector(TUNED)
    assert det.flush() is None
    det.process(np.zeros(10))
    assert det.sample_counter == 10
    assert not det.in_roi


def test_event_amplitude_for_roi_spanning_blocks():
    x = np.concatenate([np.zeros(50), np.hanning(60), np.zeros(300)])
    params = SrmacParams(0.5, 0.9, 0.5, 1e-4)
    det = SrmacDetector(params)
    events = det.process(x[:80]) + det.process(x[80:])
    assert events == stream_all(params, x)
    assert events[0].amplitude == x[events[0].index]


def test_trace_matches_internal_state(filtered_75):
    tr = srmac_trace(TUNED, filtered_75[:500])
    det = SrmacDetector(TUNED)
    for v in filtered_75[:500]:
        det.push(v)
    assert det.outputs == (tr["e_fast"][-1], tr["e_slow"][-1], tr["e_cross"][-1])
    assert set(tr) == {"x", "e_fast", "e_slow", "e_cross"}


def _best_time(params, x, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        srmac_scan(params, x)
        best = min(best, time.perf_counter() - t0)
    return best


def test_work_is_linear_in_length():
    x = np.random.default_rng(0).normal(size=2_000_000)
    short = _best_time(TUNED, x[:200_000])
    long = _best_time(TUNED, x)
    assert 8.0 <= long / short <= 12.0
