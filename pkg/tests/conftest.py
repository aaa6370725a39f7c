"""
Shared fixtures: small grids, a quiet environment and an isolated output directory
"""

import math

import numpy as np
import pytest

from fdkp.models.fields import GridSpec
from fdkp.models.solver import SolverConfig
from fdkp.utils.config import get_settings


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Point FDKP_OUTPUT_DIR at a temporary directory and re-read the environment"""
    output_dir = tmp_path / "output"
    monkeypatch.setenv("FDKP_OUTPUT_DIR", str(output_dir))
    monkeypatch.setenv("FDKP_THREADS", "2")
    get_settings.cache_clear()
    yield output_dir
    get_settings.cache_clear()


@pytest.fixture
def output_dir(isolated_settings):
    return isolated_settings


@pytest.fixture
def small_grid():
    return GridSpec(32, 32, 2.0 * math.pi, 2.0 * math.pi)


@pytest.fixture
def small_config():
    return SolverConfig(beta=1.0, n1=32, n2=32, dt=1e-2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
