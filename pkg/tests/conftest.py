"""
Shared models for the test suite.
"""

import json

import pytest

from ergocert.config import reload_settings
from ergocert.lattice import StateSpace
from ergocert.models import build_ctmc, build_pdmp, build_rotation, cyclic_dtmc

from .oracles import TWO_STATE_RATES


@pytest.fixture
def two_state():
    """Symmetric 2-state chain, ``T_t = ((1 ± e^{−2t})/2)``."""
    return build_ctmc(StateSpace.uniform(2), TWO_STATE_RATES)


@pytest.fixture
def pdmp4():
    return build_pdmp(4, 1.0)


@pytest.fixture
def rotation4():
    return build_rotation(4)


@pytest.fixture
def cycle3():
    return cyclic_dtmc(3)


@pytest.fixture
def model_file(tmp_path):
    """Write a model document and return its path."""

    def write(document, name="model.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path

    return write


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    """Run every test against the default environment."""
    for var in ("ERGOCERT_THREADS", "ERGOCERT_LOG_LEVEL", "ERGOCERT_TRUNCATION"):
        monkeypatch.delenv(var, raising=False)
    reload_settings()
    yield
    reload_settings()

