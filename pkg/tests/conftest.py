# conftest.py
import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from sampler import StepConfig  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte-Carlo or spectral runs")


@pytest.fixture
def coarse_cfg():
    """Coarse grid for shape and bookkeeping tests"""
    return StepConfig(h=1e-2, t_max=5.0)


@pytest.fixture
def fine_cfg():
    return StepConfig(h=1e-3, t_max=20.0)


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    """Keep the calibration cache and seed override out of the user's environment"""
    monkeypatch.setenv("FW_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.delenv("FW_SEED", raising=False)
