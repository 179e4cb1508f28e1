"""Dataset loading/saving and the synthetic PPG generator.

On-disk layout::

    root/
      healthy/ | not-healthy/
        rest/ | balke/ | recovery/
          <subject>_ppg.csv     one sample value per line (header optional)
          <subject>_peaks.csv   one annotated peak sample index per line

Annotations live on disk as sample indices and are converted to seconds on
load. The signal and annotation readers are pluggable for datasets with
other column layouts.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .signal_model import AnnotatedRecord, Group, PeakList, Phase, PpgRecord, index_to_time

log = logging.getLogger(__name__)

DEFAULT_RATE_HZ = 200.0

GROUP_DIRS = {
    "healthy": Group.HEALTHY,
    "not-healthy": Group.COPD,
    "not_healthy": Group.COPD,
    "nothealthy": Group.COPD,
    "unhealthy": Group.COPD,
    "copd": Group.COPD,
}
PHASE_DIRS = {
    "rest": Phase.REST,
    "balke": Phase.WALKING,
    "walking": Phase.WALKING,
    "recovery": Phase.RECOVERY,
}
GROUP_DIR_NAMES = {Group.HEALTHY: "healthy", Group.COPD: "not-healthy"}
PHASE_DIR_NAMES = {Phase.REST: "rest", Phase.WALKING: "balke", Phase.RECOVERY: "recovery"}


class DatasetFormatError(ValueError):
    """A dataset file is missing or malformed."""


@dataclass(frozen=True)
class DatasetLayout:
    signal_suffix: str = "_ppg.csv"
    annotation_suffix: str = "_peaks.csv"

    def annotation_for(self, signal_path):
        stem = signal_path.name[: -len(self.signal_suffix)]
        return signal_path.with_name(stem + self.annotation_suffix)

    def subject_of(self, signal_path):
        return signal_path.name[: -len(self.signal_suffix)]


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def _read_column(path, column, convert):
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if column >= len(fields):
                raise DatasetFormatError(f"{path}:{lineno}: expected at least {column + 1} columns")
            cell = fields[column].strip()
            if lineno == 1 and not _is_number(cell):
                continue  # header
            try:
                values.append(convert(cell))
            except ValueError:
                raise DatasetFormatError(f"{path}:{lineno}: cannot parse {cell!r}") from None
    return values


def read_signal_csv(path, column=0):
    """Sample values from column ``column`` of a CSV file."""
    values = _read_column(path, column, float)
    arr = np.array(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DatasetFormatError(f"{path}: non-finite sample value")
    return arr


def _parse_index(text):
    v = float(text)
    if not v.is_integer():
        raise ValueError(text)
    return int(v)


def read_annotation_csv(path, column=0):
    """Peak sample indices from a CSV file."""
    return np.array(_read_column(path, column, _parse_index), dtype=np.int64)


def load_dataset(
    root,
    sample_rate_hz=DEFAULT_RATE_HZ,
    layout=None,
    signal_reader=read_signal_csv,
    annotation_reader=read_annotation_csv,
):
    """Load every annotated record under ``root``.

    Group and phase come from the directory names, the subject id from the
    file name. Records are returned sorted by (subject, group, phase).
    """
    layout = layout or DatasetLayout()
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root not found: {root}")
    dataset = []
    for group_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        group = GROUP_DIRS.get(group_dir.name.lower())
        if group is None:
            log.warning("skipping unrecognized group directory %s", group_dir)
            continue
        for phase_dir in sorted(p for p in group_dir.iterdir() if p.is_dir()):
            phase = PHASE_DIRS.get(phase_dir.name.lower())
            if phase is None:
                log.warning("skipping unrecognized phase directory %s", phase_dir)
                continue
            for sig_path in sorted(phase_dir.glob("*" + layout.signal_suffix)):
                ann_path = layout.annotation_for(sig_path)
                if not ann_path.is_file():
                    raise DatasetFormatError(f"missing annotation file {ann_path} for {sig_path}")
                samples = signal_reader(sig_path)
                if samples.size == 0:
                    raise DatasetFormatError(f"{sig_path}: no samples")
                idx = annotation_reader(ann_path)
                if idx.size and (idx.min() < 0 or idx.max() >= samples.size):
                    raise DatasetFormatError(f"{ann_path}: peak index outside the signal")
                record = PpgRecord(samples, sample_rate_hz, layout.subject_of(sig_path), group, phase)
                dataset.append(AnnotatedRecord(record, PeakList(index_to_time(idx, sample_rate_hz))))
    if not dataset:
        log.warning("no records found under %s", root)
    dataset.sort(key=lambda ar: (ar.record.subject_id, ar.record.group.value, list(Phase).index(ar.record.phase)))
    summary = dataset_summary(dataset)
    log.info(
        "loaded %d records from %d subjects: %.1f min, %d peaks",
        summary["records"],
        summary["subjects"],
        summary["minutes"],
        summary["peaks"],
    )
    return dataset


def dataset_summary(dataset):
    """Observed counts: records, subjects, minutes and annotated peaks."""
    return {
        "records": len(dataset),
        "subjects": len({r.subject_id for r, _ in dataset}),
        "minutes": sum(r.duration_s for r, _ in dataset) / 60.0,
        "peaks": sum(len(p) for _, p in dataset),
    }


def save_record(record, peaks, directory, stem=None, layout=None):
    """Write ``<stem>_ppg.csv`` and ``<stem>_peaks.csv`` into ``directory``.

    Samples are written with ``repr`` so they read back bit-exactly.
    """
    layout = layout or DatasetLayout()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = stem or record.subject_id
    sig_path = directory / (stem + layout.signal_suffix)
    ann_path = directory / (stem + layout.annotation_suffix)
    with open(sig_path, "w") as fh:
        fh.writelines(f"{v!r}\n" for v in record.samples.tolist())
    idx = peaks.to_indices(record.sample_rate_hz)
    with open(ann_path, "w") as fh:
        fh.writelines(f"{int(i)}\n" for i in idx)
    return sig_path, ann_path


def save_dataset(dataset, root, layout=None):
    """Write records into the group/phase directory layout."""
    root = Path(root)
    paths = []
    for record, peaks in dataset:
        d = root / GROUP_DIR_NAMES[record.group] / PHASE_DIR_NAMES[record.phase]
        paths.append(save_record(record, peaks, d, layout=layout))
    return paths


# --------------------------------------------------------------------------
# synthetic PPG


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic PPG generator settings.

    Amplitudes are in volt-like units; the default pulse height of 5 mV
    keeps SRMAC thresholds in the [0, 5e-4) range meaningful. Pulse timings
    are quoted for 75 bpm and stretch with the square root of the beat
    interval.
    """

    duration_s: float = 60.0
    sample_rate_hz: float = DEFAULT_RATE_HZ
    heart_rate_bpm: float = 75.0
    heart_rate_end_bpm: float | None = None  # linear ramp when set
    rr_jitter_s: float = 0.0
    amplitude: float = 5e-3
    amplitude_jitter: float = 0.0  # relative std of per-beat height
    systolic_width_s: float = 0.08
    diastolic_delay_s: float = 0.24
    diastolic_width_s: float = 0.14
    diastolic_ratio: float = 0.45
    notch_depth: float = 0.1
    notch_delay_s: float = 0.15
    notch_width_s: float = 0.03
    baseline_amplitude: float = 2e-3
    baseline_freq_hz: float = 0.25
    dc_offset: float = 0.0
    noise_std: float = 0.0
    artifact_rate_hz: float = 0.0
    artifact_amplitude: float = 0.0
    seed: int = 0
    subject_id: str = "synth"
    group: Group = Group.HEALTHY
    phase: Phase = Phase.REST

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ValueError("duration_s must be positive")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        for hr in (self.heart_rate_bpm, self.heart_rate_end_bpm):
            if hr is not None and not 30 <= hr <= 220:
                raise ValueError(f"heart rate {hr} bpm outside [30, 220]")
        for name in (
            "rr_jitter_s", "amplitude", "amplitude_jitter", "systolic_width_s",
            "diastolic_width_s", "diastolic_ratio", "notch_depth", "notch_width_s",
            "baseline_amplitude", "noise_std", "artifact_rate_hz", "artifact_amplitude",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.systolic_width_s == 0:
            raise ValueError("systolic_width_s must be positive")

    def replace(self, **changes):
        return SynthConfig(**{**asdict(self), **changes})


def _heart_rate_at(cfg, t):
    if cfg.heart_rate_end_bpm is None:
        return cfg.heart_rate_bpm
    frac = min(max(t / cfg.duration_s, 0.0), 1.0)
    return cfg.heart_rate_bpm + frac * (cfg.heart_rate_end_bpm - cfg.heart_rate_bpm)


def _beat_times(cfg, rng):
    times = []
    rr0 = 60.0 / _heart_rate_at(cfg, 0.0)
    t = 0.5 * rr0
    # beats before 0 and after the end shape the edges but are not annotated
    t_first = t - rr0
    beats = [t_first]
    while t < cfg.duration_s + 1.0:
        beats.append(t)
        rr = 60.0 / _heart_rate_at(cfg, t)
        if cfg.rr_jitter_s:
            rr = max(rr + rng.normal(0.0, cfg.rr_jitter_s), 0.25)
        t += rr
    for i, b in enumerate(beats):
        nxt = beats[i + 1] - b if i + 1 < len(beats) else 60.0 / _heart_rate_at(cfg, b)
        times.append((b, nxt))
    return times


def _gauss(t, center, width):
    return np.exp(-0.5 * ((t - center) / width) ** 2)


def _clean_waveform(cfg, t, beats, heights):
    y = np.zeros_like(t)
    for (tb, rr), h in zip(beats, heights):
        s = min(max(math.sqrt(rr / 0.8), 0.7), 1.2)
        lo = np.searchsorted(t, tb - 0.5 * s)
        hi = np.searchsorted(t, tb + 1.2 * s)
        tt = t[lo:hi]
        pulse = _gauss(tt, tb, cfg.systolic_width_s * s)
        pulse += cfg.diastolic_ratio * _gauss(tt, tb + cfg.diastolic_delay_s * s, cfg.diastolic_width_s * s)
        if cfg.notch_depth:
            pulse -= cfg.notch_depth * _gauss(tt, tb + cfg.notch_delay_s * s, cfg.notch_width_s * s)
        y[lo:hi] += h * pulse
    y += cfg.baseline_amplitude * np.sin(2 * np.pi * cfg.baseline_freq_hz * t)
    return y


def _artifacts(cfg, t, rng):
    out = np.zeros_like(t)
    if not (cfg.artifact_rate_hz and cfg.artifact_amplitude):
        return out
    n_bursts = rng.poisson(cfg.artifact_rate_hz * cfg.duration_s)
    for _ in range(n_bursts):
        start = rng.uniform(0.0, cfg.duration_s)
        length = rng.uniform(0.5, 2.0)
        freq = rng.uniform(1.0, 3.0)
        amp = cfg.artifact_amplitude * rng.uniform(0.5, 1.0)
        phase = rng.uniform(0, 2 * np.pi)
        mask = (t >= start) & (t < start + length)
        u = (t[mask] - start) / length
        out[mask] += amp * np.sin(np.pi * u) ** 2 * np.sin(2 * np.pi * freq * (t[mask] - start) + phase)
    return out


def synth_waveforms(config):
    """Generate a record's components.

    Returns ``(signal, clean, peak_indices)`` where ``clean`` is the waveform
    before noise and artifacts and each peak index is a local maximum of
    ``clean`` near a systolic pulse center.
    """
    cfg = config
    rng = np.random.default_rng(cfg.seed)
    n = int(round(cfg.duration_s * cfg.sample_rate_hz))
    t = np.arange(n) / cfg.sample_rate_hz
    beats = _beat_times(cfg, rng)
    heights = cfg.amplitude * np.clip(1.0 + cfg.amplitude_jitter * rng.standard_normal(len(beats)), 0.2, None)
    clean = _clean_waveform(cfg, t, beats, heights)

    half = max(1, int(round(0.1 * cfg.sample_rate_hz)))
    peaks = []
    for tb, _ in beats:
        c = int(round(tb * cfg.sample_rate_hz))
        lo, hi = max(c - half, 0), min(c + half + 1, n)
        if hi - lo < 3:
            continue
        k = lo + int(np.argmax(clean[lo:hi]))
        if 0 < k < n - 1 and clean[k] > clean[k - 1] and clean[k] >= clean[k + 1]:
            if not peaks or k > peaks[-1]:
                peaks.append(k)
    signal = cfg.dc_offset + clean + _artifacts(cfg, t, rng)
    if cfg.noise_std:
        signal = signal + rng.normal(0.0, cfg.noise_std, n)
    return signal, clean, np.asarray(peaks, dtype=np.int64)


def synth_record(config=None):
    """One synthetic annotated record, deterministic in ``config.seed``."""
    cfg = config or SynthConfig()
    signal, _, peaks = synth_waveforms(cfg)
    record = PpgRecord(signal, cfg.sample_rate_hz, cfg.subject_id, cfg.group, cfg.phase)
    return AnnotatedRecord(record, PeakList.from_indices(peaks, cfg.sample_rate_hz))


# per-phase settings: heart-rate multiplier and disturbance levels
_PHASE_PROFILE = {
    Phase.REST: dict(hr_mult=1.0, hr_end_mult=None, noise=0.02, artifact_rate=0.0, artifact_amp=0.0),
    Phase.WALKING: dict(hr_mult=1.45, hr_end_mult=None, noise=0.06, artifact_rate=0.15, artifact_amp=1.2),
    Phase.RECOVERY: dict(hr_mult=1.3, hr_end_mult=1.1, noise=0.02, artifact_rate=0.0, artifact_amp=0.0),
}


def subject_config(subject_index, phase, seed=0, duration_s=60.0, clean=False):
    """Settings for one subject/phase of a synthetic cohort.

    Subjects alternate between the healthy and COPD groups. Morphology,
    resting heart rate and signal magnitude vary per subject; the walking
    phase adds motion artifacts and extra noise unless ``clean`` is set.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(subject_index,))
    rng = np.random.default_rng(ss)
    group = Group.HEALTHY if subject_index % 2 == 0 else Group.COPD
    prefix = "H" if group is Group.HEALTHY else "C"
    subject_id = f"{prefix}{subject_index // 2 + 1:02d}"
    base_hr = rng.uniform(65.0, 90.0)
    amplitude = 5e-3 * rng.uniform(0.5, 2.0)
    morph = dict(
        systolic_width_s=rng.uniform(0.07, 0.09),
        diastolic_delay_s=rng.uniform(0.22, 0.26),
        diastolic_width_s=rng.uniform(0.12, 0.15),
        diastolic_ratio=rng.uniform(0.3, 0.5),
        notch_depth=rng.uniform(0.0, 0.15),
        baseline_freq_hz=rng.uniform(0.15, 0.35),
    )
    prof = _PHASE_PROFILE[Phase(phase)]
    hr = min(base_hr * prof["hr_mult"], 200.0)
    hr_end = None if prof["hr_end_mult"] is None else base_hr * prof["hr_end_mult"]
    noise = 0.005 if clean else prof["noise"]
    art_rate = 0.0 if clean else prof["artifact_rate"]
    art_amp = 0.0 if clean else prof["artifact_amp"]
    phase_index = list(Phase).index(Phase(phase))
    return SynthConfig(
        duration_s=duration_s,
        heart_rate_bpm=hr,
        heart_rate_end_bpm=hr_end,
        rr_jitter_s=0.02,
        amplitude=amplitude,
        amplitude_jitter=0.05,
        baseline_amplitude=0.4 * amplitude,
        noise_std=noise * amplitude,
        artifact_rate_hz=art_rate,
        artifact_amplitude=art_amp * amplitude,
        seed=int(rng.integers(2**31)) + phase_index,
        subject_id=subject_id,
        group=group,
        phase=Phase(phase),
        **morph,
    )


def synth_suite(n_subjects, seed=0, phases=tuple(Phase), duration_s=60.0, clean=False):
    """Synthetic cohort: ``n_subjects`` subjects, one record per phase."""
    return [
        synth_record(subject_config(i, p, seed=seed, duration_s=duration_s, clean=clean))
        for i in range(n_subjects)
        for p in phases
    ]


def clean_suite(n_records=10, seed=0, duration_s=60.0):
    """``n_records`` clean resting records, each from a different subject."""
    return synth_suite(n_records, seed=seed, phases=(Phase.REST,), duration_s=duration_s, clean=True)
