import numpy as np
import pytest
from hypothesis import settings

from cbm_advbench.config import build_experiment_config
from cbm_advbench.data import Label, SyntheticConfig, synthesize_bearing_dataset
from cbm_advbench.experiment import run_experiment
from cbm_advbench.features import fit_standardizer

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_dataset():
    """60 windows per class, standardized on itself."""
    _, ds = synthesize_bearing_dataset(SyntheticConfig(counts={lab: 60 for lab in Label}, seed=3))
    scaler = fit_standardizer(ds.X)
    return ds.with_features(scaler.transform(ds.X), standardized=True)


@pytest.fixture(scope="session")
def default_dataset():
    """The default synthetic corpus (200 windows per class), standardized on itself."""
    _, ds = synthesize_bearing_dataset(SyntheticConfig())
    scaler = fit_standardizer(ds.X)
    return ds.with_features(scaler.transform(ds.X), standardized=True)


@pytest.fixture(scope="session")
def pipeline_result():
    """Full study with defense at master seed 0."""
    cfg = build_experiment_config({"input.synthetic": "true", "defense.enabled": "true"}, 0)
    return run_experiment(cfg)
