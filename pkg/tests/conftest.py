import os

import numpy as np
import pytest

from src.modeling.configuration import ENV_PREFIX, Configuration
from src.modeling.oscillator import OscillatorParams, simulate
from src.modeling.timeseries import TimeSeries, save_csv


@pytest.fixture(autouse=True)
def clean_surrogate_env(monkeypatch):
    """Keep SURROGATE_* variables from the developer's shell out of the tests."""
    for key in list(os.environ):
        if key.startswith(ENV_PREFIX):
            monkeypatch.delenv(key, raising=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def lorenz_params():
    return OscillatorParams.from_k_beta(26.26, 4.73)


@pytest.fixture
def unit_params():
    return OscillatorParams.from_k_beta(10.0, 1.0)


@pytest.fixture
def fast_config():
    """Small swarm so oscillator fits stay quick in unit tests."""
    return Configuration(swarm=20, pso_iters=60, polish=True, max_concurrency=2)


@pytest.fixture(scope="session")
def oscillator_record():
    """20000 samples of the (k=10, beta=1) oscillator at dt=0.1."""
    return simulate(OscillatorParams.from_k_beta(10.0, 1.0), T=2000.0, dt=0.1, rng_seed=7)


@pytest.fixture
def write_series(tmp_path):
    """Write a TimeSeries to tmp_path and return the path."""

    def _write(ts: TimeSeries, name: str = "series.csv"):
        path = tmp_path / name
        save_csv(ts, path)
        return path

    return _write
