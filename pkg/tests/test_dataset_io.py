import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppgpeaks.dataset_io import (
    DatasetFormatError,
    SynthConfig,
    clean_suite,
    dataset_summary,
    load_dataset,
    read_signal_csv,
    save_dataset,
    save_record,
    synth_record,
    synth_suite,
    synth_waveforms,
)
from ppgpeaks.signal_model import Group, PeakList, Phase, PpgRecord


def local_maxima(y):
    return np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])) + 1


@pytest.fixture(scope="module")
def small_suite():
    return synth_suite(2, seed=3, duration_s=10.0)


def test_save_load_roundtrip(small_suite, tmp_path):
    save_dataset(small_suite, tmp_path)
    loaded = load_dataset(tmp_path)
    assert len(loaded) == len(small_suite)
    key = lambda ar: (ar.record.subject_id, ar.record.phase.value)  # noqa: E731
    for (r1, p1), (r2, p2) in zip(sorted(small_suite, key=key), sorted(loaded, key=key)):
        assert r1 == r2
        assert p1 == p2


def test_layout_on_disk(small_suite, tmp_path):
    save_dataset(small_suite, tmp_path)
    names = sorted(str(p.relative_to(tmp_path)) for p in tmp_path.rglob("*.csv"))
    assert "healthy/balke/H01_ppg.csv" in names
    assert "not-healthy/recovery/C01_peaks.csv" in names
    assert len(names) == 12


def test_directory_aliases_are_case_insensitive(tmp_path):
    rec = PpgRecord(np.arange(5.0), 200.0, "S7")
    save_record(rec, PeakList([0.01]), tmp_path / "Not-Healthy" / "Walking")
    (ar,) = load_dataset(tmp_path)
    assert (ar.record.group, ar.record.phase) == (Group.COPD, Phase.WALKING)


def test_save_record_format(tmp_path):
    x = np.random.default_rng(0).normal(size=12000)
    rec = PpgRecord(x, 200.0, "S1")
    sig, ann = save_record(rec, PeakList(), tmp_path)
    assert len(sig.read_text().splitlines()) == 12000
    assert ann.read_text() == ""
    np.testing.assert_array_equal(read_signal_csv(sig), x)


@settings(max_examples=25)
@given(st.lists(st.floats(-1e300, 1e300, allow_nan=False), min_size=1, max_size=50))
def test_samples_roundtrip_bit_exact(tmp_path_factory, values):
    d = tmp_path_factory.mktemp("rt")
    rec = PpgRecord(np.array(values), 200.0, "S1")
    sig, _ = save_record(rec, PeakList(), d)
    assert read_signal_csv(sig).tobytes() == rec.samples.tobytes()


def test_header_line_is_skipped(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("ppg,ir\n1.5,2\n2.5,3\n")
    np.testing.assert_array_equal(read_signal_csv(p), [1.5, 2.5])
    np.testing.assert_array_equal(read_signal_csv(p, column=1), [2.0, 3.0])


def test_missing_annotation_names_the_file(tmp_path):
    d = tmp_path / "healthy" / "rest"
    d.mkdir(parents=True)
    (d / "S1_ppg.csv").write_text("1\n2\n")
    with pytest.raises(DatasetFormatError, match="S1_peaks.csv"):
        load_dataset(tmp_path)


def test_malformed_line_reports_line_number(tmp_path):
    d = tmp_path / "healthy" / "rest"
    d.mkdir(parents=True)
    (d / "S1_ppg.csv").write_text("1.0\n2.0\nabc\n4.0\n")
    (d / "S1_peaks.csv").write_text("1\n")
    with pytest.raises(DatasetFormatError, match=r"S1_ppg\.csv:3"):
        load_dataset(tmp_path)


def test_annotation_out_of_range(tmp_path):
    d = tmp_path / "healthy" / "rest"
    d.mkdir(parents=True)
    (d / "S1_ppg.csv").write_text("1\n2\n")
    (d / "S1_peaks.csv").write_text("5\n")
    with pytest.raises(DatasetFormatError):
        load_dataset(tmp_path)


def test_empty_root_warns(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        assert load_dataset(tmp_path) == []
    assert "no records" in caplog.text


def test_missing_root(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path / "nope")


def test_custom_readers(tmp_path):
    d = tmp_path / "healthy" / "rest"
    d.mkdir(parents=True)
    (d / "S1_ppg.csv").write_text("t;v\n0;1\n1;2\n2;3\n")
    (d / "S1_peaks.csv").write_text("2\n")
    reader = lambda p: np.loadtxt(p, delimiter=";", skiprows=1)[:, 1]  # noqa: E731
    (ar,) = load_dataset(tmp_path, signal_reader=reader)
    np.testing.assert_array_equal(ar.record.samples, [1, 2, 3])


def test_summary_counts(small_suite):
    s = dataset_summary(small_suite)
    assert s["records"] == 6 and s["subjects"] == 2
    assert s["minutes"] == pytest.approx(1.0)
    assert s["peaks"] == sum(len(p) for _, p in small_suite)


def test_clean_75_bpm_record():
    rec, peaks = synth_record(SynthConfig(heart_rate_bpm=75.0))
    assert abs(len(peaks) - 75) <= 1
    np.testing.assert_allclose(np.diff(peaks.times_s), 0.8, atol=0.0051)


def test_jittered_intervals_stay_near_nominal():
    _, peaks = synth_record(SynthConfig(heart_rate_bpm=75.0, rr_jitter_s=0.02))
    rr = np.diff(peaks.times_s)
    assert abs(rr.mean() - 0.8) < 0.01
    assert 0.01 < rr.std() < 0.04


def test_synth_is_deterministic():
    cfg = SynthConfig(noise_std=1e-4, artifact_rate_hz=0.2, artifact_amplitude=2e-3, seed=9)
    a, b = synth_record(cfg), synth_record(cfg)
    assert a.record == b.record and a.peaks == b.peaks
    assert synth_record(cfg.replace(seed=10)).record != a.record
    assert synth_suite(2, seed=1) == synth_suite(2, seed=1)


def test_notch_free_beats_are_unimodal():
    cfg = SynthConfig(notch_depth=0.0, baseline_amplitude=0.0)
    _, clean, peaks = synth_waveforms(cfg)
    np.testing.assert_array_equal(local_maxima(clean), peaks)


def test_notch_makes_beats_bimodal():
    _, clean, peaks = synth_waveforms(SynthConfig(notch_depth=0.1, baseline_amplitude=0.0))
    assert len(local_maxima(clean)) == 2 * len(peaks)


@pytest.mark.parametrize(
    "kw",
    [
        {},
        {"heart_rate_bpm": 40.0},
        {"heart_rate_bpm": 180.0, "rr_jitter_s": 0.02},
        {"heart_rate_bpm": 200.0, "heart_rate_end_bpm": 60.0, "rr_jitter_s": 0.05, "amplitude_jitter": 0.2},
    ],
)
def test_annotations_track_fine_grid_maxima(kw):
    cfg = SynthConfig(**kw)
    _, clean, peaks = synth_waveforms(cfg)
    assert np.all(np.isin(peaks, local_maxima(clean)))
    # beat times and heights depend only on the seed, so a 10x denser
    # rendering of the same record locates each maximum more precisely
    _, _, fine = synth_waveforms(cfg.replace(sample_rate_hz=2000.0))
    assert len(fine) == len(peaks)
    assert np.max(np.abs(fine / 2000.0 - peaks / 200.0)) <= 1 / 200.0


def test_annotations_ignore_noise():
    cfg = SynthConfig(seed=2)
    noisy = cfg.replace(noise_std=5e-4, artifact_rate_hz=0.3, artifact_amplitude=5e-3)
    assert synth_record(cfg).peaks == synth_record(noisy).peaks
    assert synth_record(cfg).record != synth_record(noisy).record


@pytest.mark.parametrize(
    "kw",
    [
        {"heart_rate_bpm": 20.0},
        {"heart_rate_bpm": 250.0},
        {"heart_rate_end_bpm": 10.0},
        {"amplitude": -1.0},
        {"noise_std": -0.1},
        {"duration_s": 0.0},
        {"systolic_width_s": 0.0},
    ],
)
def test_invalid_config(kw):
    with pytest.raises(ValueError):
        SynthConfig(**kw)


def test_suite_structure():
    suite = synth_suite(4, seed=0, duration_s=5.0)
    assert len(suite) == 12
    ids = {(r.subject_id, r.group) for r, _ in suite}
    assert ids == {("H01", Group.HEALTHY), ("C01", Group.COPD), ("H02", Group.HEALTHY), ("C02", Group.COPD)}
    assert [r.phase for r, _ in suite[:3]] == list(Phase)
    clean = clean_suite(10, duration_s=5.0)
    assert len(clean) == 10 and len({r.subject_id for r, _ in clean}) == 10
    assert all(r.phase is Phase.REST for r, _ in clean)
