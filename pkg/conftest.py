"""Shared pytest fixtures for robustrisk."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from robustrisk.services.empirical import make_distribution
from robustrisk.services.oracle import OracleConfig

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def standardized():
    """Factory for seeded samples rescaled to mean 0 and std 1."""

    def build(n: int, seed: int = 0):
        rng = np.random.default_rng(seed)
        raw = rng.standard_normal(n)
        return make_distribution((raw - raw.mean()) / raw.std())

    return build


@pytest.fixture
def small_oracle():
    """Oracle configuration sized for unit tests."""
    return OracleConfig(seed=11, restarts=4, iterations=150, min_atoms=64, threads=1)


@pytest.fixture
def sample_path() -> Path:
    return DATA_DIR / "sample_returns.csv"


@pytest.fixture
def spectrum_path() -> Path:
    return DATA_DIR / "es_spectrum.csv"
