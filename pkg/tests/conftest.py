import json
import sys

import numpy as np
import pytest
from loguru import logger

from app.core.config import settings
from app.services.mappings import halving_map, matrix_quarter_map, quarter_turn


@pytest.fixture(autouse=True)
def _isolated_run(monkeypatch):
    """Keep KFIX_OUT from leaking in and route logs to whatever stderr is current."""
    monkeypatch.setattr(settings, "OUT", None)
    logger.remove()
    logger.add(lambda message: sys.stderr.write(message), level="DEBUG")
    yield
    logger.remove()
    logger.add(lambda message: sys.stderr.write(message), level="DEBUG")


@pytest.fixture
def halving():
    return halving_map()


@pytest.fixture
def matrix_quarter():
    return matrix_quarter_map()


@pytest.fixture
def rotation():
    return quarter_turn()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def write_problem(tmp_path):
    """Write a problem dict (or raw text) to a JSON file and return its path."""

    def _write(problem, name="problem.json"):
        path = tmp_path / name
        text = problem if isinstance(problem, str) else json.dumps(problem)
        path.write_text(text, encoding="utf-8")
        return str(path)

    return _write
