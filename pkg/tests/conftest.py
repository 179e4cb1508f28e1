import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ppgpeaks.dataset_io import SynthConfig, synth_record

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# parameters that detect every beat of a clean 75 bpm synthetic record
TUNED_SRMAC = (0.8, 0.95, 0.9, 0.0)
TUNED_TERMA = (111.0, 667.0, 0.02)


@pytest.fixture(scope="session")
def clean_75():
    return synth_record(SynthConfig(heart_rate_bpm=75.0, duration_s=60.0, seed=3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
