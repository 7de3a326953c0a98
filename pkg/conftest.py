import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.core import solver  # noqa: E402
from src.core.pairwise import CompleteCases, build_pairwise  # noqa: E402

DESCENT_SLACK = 1e-10


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the Monte-Carlo acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def lla_descent_check(monkeypatch):
    """Every SCAD/MCP fit in the suite must have a nonincreasing objective trace."""
    original = solver.fit_lla

    def checked(*args, **kwargs):
        fit = original(*args, **kwargs)
        steps = np.diff(np.asarray(fit.objective_trace, dtype=float))
        assert np.all(steps <= DESCENT_SLACK), f"LLA objective increased: {fit.objective_trace}"
        return fit

    monkeypatch.setattr(solver, "fit_lla", checked)
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def make_cases(rng, n=40, p=4, beta=None, binary=False):
    X = rng.standard_normal((n, p))
    beta = np.zeros(p) if beta is None else np.asarray(beta, dtype=float)
    eta = X @ beta
    if binary:
        y = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    else:
        y = eta + rng.standard_normal(n)
    return CompleteCases(y=y, X=X)


@pytest.fixture
def small_cases(rng):
    return make_cases(rng, n=40, p=4, beta=[2.0, -1.0, 0.0, 0.0])


@pytest.fixture
def small_design(small_cases):
    return build_pairwise(small_cases)


@pytest.fixture
def tight_config():
    return solver.SolverConfig(kkt_tol=1e-10, cd_tol=1e-12)
