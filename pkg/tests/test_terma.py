import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import TUNED_TERMA
from ppgpeaks.dataset_io import SynthConfig, synth_record
from ppgpeaks.filters import BandpassSpec, FilterMode
from ppgpeaks.metrics import match_peaks
from ppgpeaks.signal_model import PpgRecord
from ppgpeaks.terma import (
    TermaParams,
    centered_mean,
    clip_square,
    prepare,
    terma_blocks,
    terma_detect_batch,
    terma_preprocess,
    terma_trace,
    window_samples,
)

TUNED = TermaParams(*TUNED_TERMA)


def brute_centered_mean(z, w):
    half = (w - 1) // 2
    out = np.empty(len(z))
    for i in range(len(z)):
        lo, hi = max(i - half, 0), min(i - half + w, len(z))
        out[i] = sum(z[lo:hi]) / (hi - lo)
    return out


@pytest.fixture(scope="module")
def prepared_75(clean_75):
    return prepare(clean_75.record)


def test_clip_square_examples():
    np.testing.assert_array_equal(clip_square([-3.0, 2.0, 0.0]), [0.0, 4.0, 0.0])
    assert not np.any(clip_square(-np.abs(np.random.default_rng(0).normal(size=50))))


def test_sign_flip_changes_output(clean_75):
    rec = clean_75.record
    _, z_pos = terma_preprocess(rec)
    _, z_neg = terma_preprocess(rec.with_samples(-rec.samples))
    assert not np.array_equal(z_pos, z_neg)
    assert np.all(z_pos >= 0) and np.all(z_neg >= 0)


def test_preprocess_forces_zero_phase(clean_75):
    causal = terma_preprocess(clean_75.record, BandpassSpec(mode=FilterMode.CAUSAL))
    zero = terma_preprocess(clean_75.record)
    np.testing.assert_array_equal(causal[0], zero[0])


@pytest.mark.parametrize("w_ms, expected", [(111, 22), (667, 133), (51, 10), (1, 1), (0.1, 1), (2.5, 1)])
def test_window_samples(w_ms, expected):
    assert window_samples(w_ms, 200.0) == expected


@given(st.lists(st.floats(0, 100), min_size=1, max_size=60), st.integers(1, 25))
def test_centered_mean_matches_brute_force(values, w):
    z = np.array(values)
    np.testing.assert_allclose(centered_mean(z, w), brute_centered_mean(z, w), rtol=1e-9, atol=1e-9)


def test_params_validation():
    for bad in ((111, 111, 0.0), (700, 600, 0.0), (0, 600, 0.0), (100, 600, -0.01)):
        with pytest.raises(ValueError):
            TermaParams(*bad)
    assert TermaParams.from_vector(TUNED.to_vector()) == TUNED


@pytest.mark.parametrize("c", [0.0, 3.0, -2.5, 1e6])
def test_constant_input_gives_nothing(c):
    rec = PpgRecord(np.full(12000, c), 200.0)
    assert len(terma_detect_batch(TermaParams(51, 545, 0.0), rec)) == 0


def test_equal_windows_give_no_blocks(prepared_75):
    for w in (10, 22, 133):
        assert terma_blocks(prepared_75, w, w, 0.0)[0].size == 0


def test_beta_zero_threshold_is_ma_beat(prepared_75):
    tr = terma_trace(TermaParams(111, 667, 0.0), prepared_75)
    np.testing.assert_array_equal(tr["threshold"], tr["ma_beat"])


def test_clean_record_75_peaks(clean_75):
    peaks = terma_detect_batch(TUNED, clean_75.record)
    assert abs(len(peaks) - 75) <= 1
    counts = match_peaks(peaks, clean_75.peaks)
    assert counts.fp == 0 and counts.fn == 0


def test_single_sample_record_is_empty():
    assert len(terma_detect_batch(TUNED, PpgRecord(np.array([2.0]), 200.0))) == 0


def runs_above(prepared, w1, w2, beta):
    """Maximal runs of MA_peak > THR as (start, end) pairs, found independently."""
    ma_peak = brute_centered_mean(prepared.z, w1)
    ma_beat = brute_centered_mean(prepared.z, w2)
    above = ma_peak > ma_beat + beta * prepared.z_mean
    runs, start = [], None
    for i, flag in enumerate(list(above) + [False]):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i))
            start = None
    return runs


@pytest.fixture(scope="module")
def short_prepared(clean_75):
    rec = clean_75.record
    return prepare(rec.with_samples(rec.samples[:1600]))


@pytest.mark.parametrize("w1, w2, beta", [(22, 133, 0.0), (10, 109, 0.05), (16, 139, 0.1), (5, 30, 0.0)])
def test_blocks_match_oracle(short_prepared, w1, w2, beta):
    peaks, starts, ends = terma_blocks(short_prepared, w1, w2, beta)
    kept = [(s, e) for s, e in runs_above(short_prepared, w1, w2, beta) if e - s >= w1]
    assert list(zip(starts.tolist(), ends.tolist())) == kept
    for p, (s, e) in zip(peaks, kept):
        assert p == s + int(np.argmax(short_prepared.filtered[s:e]))


@given(w1=st.integers(2, 30), extra=st.integers(1, 150), beta=st.floats(0.0, 0.2))
def test_peaks_lie_in_wide_blocks(prepared_75, w1, extra, beta):
    peaks, starts, ends = terma_blocks(prepared_75, w1, w1 + extra, beta)
    assert np.all(ends - starts >= w1)
    assert np.all((starts <= peaks) & (peaks < ends))


@given(w1=st.integers(2, 30), extra=st.integers(1, 150), beta=st.floats(0.0, 0.2), dbeta=st.floats(0.0, 0.2))
def test_raising_beta_shrinks_cover(prepared_75, w1, extra, beta, dbeta):
    ma_peak = centered_mean(prepared_75.z, w1, prepared_75.cumsum)
    ma_beat = centered_mean(prepared_75.z, w1 + extra, prepared_75.cumsum)
    above_lo = ma_peak > ma_beat + beta * prepared_75.z_mean
    above_hi = ma_peak > ma_beat + (beta + dbeta) * prepared_75.z_mean
    assert np.all(above_hi <= above_lo)


@pytest.mark.parametrize("seed", range(4))
def test_block_count_monotone_in_beta_on_ppg(seed):
    rec = synth_record(SynthConfig(seed=seed, heart_rate_bpm=60 + 10 * seed, noise_std=1e-4))
    prep = prepare(rec.record)
    counts = [terma_blocks(prep, 22, 133, b)[0].size for b in np.linspace(0, 0.5, 26)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))
