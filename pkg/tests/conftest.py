import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from arima_engine import ArimaParams, ArimaSpec, simulate_arima  # noqa: E402
from series_core import TimeSeries  # noqa: E402

SAMPLE_DIR = ROOT / "data" / "sample"


@pytest.fixture
def sample_dir() -> Path:
    return SAMPLE_DIR


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ar1_series() -> TimeSeries:
    """AR(1), coefficient 0.6, mean 10, 300 observations"""
    return simulate_arima(ArimaSpec(1, 0, 0), ArimaParams(4.0, (0.6,), (), 1.0), 300, seed=7, start_year=1701)


@pytest.fixture
def trending_series() -> TimeSeries:
    """Random walk with drift, 60 annual values from 1962"""
    return simulate_arima(ArimaSpec(0, 1, 0, include_constant=True), ArimaParams(0.5, (), (), 1.0), 60,
                          seed=3, start_year=1962)
