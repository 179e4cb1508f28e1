"""Systolic peak detection for PPG signals.

Two detectors share one evaluation harness:

* ``SrmacDetector`` runs three exponentially weighted moving averages and a
  threshold, one sample at a time.
* ``terma_detect_batch`` is the offline two-moving-average baseline.

The rest of the package covers peak matching with a time tolerance, random
and grid parameter search, leave-subject-out cross-validation, CSV dataset
I/O and a synthetic PPG generator.
"""

import json
from importlib import resources

from ._kernels import BACKEND
from .crossval import CvReport, SearchConfig, make_folds, run_lsocv
from .dataset_io import load_dataset, synth_record, synth_suite, clean_suite, SynthConfig
from .detectors import DetectorKind, get_detector, srmac_space, terma_space
from .filters import BandpassSpec, Ewma, FilterMode, Sma, bandpass, design_bandpass, filter_batch
from .metrics import ConfusionCounts, Metrics, aggregate_metrics, compute_metrics, match_peaks
from .optimize import Bound, SearchSpace, grid_search, random_search
from .signal_model import AnnotatedRecord, Group, PeakList, Phase, PpgRecord
from .srmac import PeakEvent, SrmacDetector, SrmacParams, srmac_detect_batch
from .terma import TermaParams, terma_detect_batch

__version__ = "0.1.0"


def load_schema(name):
    """Parsed JSON schema shipped with the package, e.g. ``"cv_report"``."""
    ref = resources.files(__name__).joinpath("schemas", f"{name}.schema.json")
    return json.loads(ref.read_text())


__all__ = [
    "BACKEND",
    "AnnotatedRecord",
    "BandpassSpec",
    "Bound",
    "ConfusionCounts",
    "CvReport",
    "DetectorKind",
    "Ewma",
    "FilterMode",
    "Group",
    "Metrics",
    "PeakEvent",
    "PeakList",
    "Phase",
    "PpgRecord",
    "SearchConfig",
    "SearchSpace",
    "Sma",
    "SrmacDetector",
    "SrmacParams",
    "SynthConfig",
    "TermaParams",
    "aggregate_metrics",
    "bandpass",
    "clean_suite",
    "compute_metrics",
    "design_bandpass",
    "filter_batch",
    "get_detector",
    "grid_search",
    "load_dataset",
    "load_schema",
    "make_folds",
    "match_peaks",
    "random_search",
    "run_lsocv",
    "srmac_detect_batch",
    "srmac_space",
    "synth_record",
    "synth_suite",
    "terma_detect_batch",
    "terma_space",
]
