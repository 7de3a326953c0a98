import math

import numpy as np
import pytest

from conftest import make_cases
from src.core import solver
from src.core.errors import BudgetError
from src.core.pairwise import CompleteCases, build_pairwise
from src.core.penalties import PenaltySpec
from src.sim.generate import gen_covariates, gen_response
from src.sim.harness import replication_rng
from src.sim.scenarios import get_setting
from src.testkit.oracles import (OracleError, exhaustive_best_subset, finite_diff_grad,
                                 oracle_fit)


@pytest.fixture
def single_pair():
    return build_pairwise(CompleteCases(y=[1.0, 0.0], X=[[1.0, 0.0], [0.0, 0.0]]))


def test_empty_support(small_design):
    fit = oracle_fit(small_design, ())
    np.testing.assert_array_equal(fit.gamma_restricted, np.zeros(4))
    assert fit.loss_value == pytest.approx(math.log(2.0), abs=1e-15)


def test_full_support_matches_unpenalized_solver(small_design, tight_config):
    oracle = oracle_fit(small_design, range(4))
    fit = solver.fit_lasso(small_design, 0.0, tight_config)
    np.testing.assert_allclose(oracle.gamma_restricted, fit.gamma_hat, atol=1e-7)
    assert np.max(np.abs(small_design.gradient(oracle.gamma_restricted))) <= 1e-10


def test_restricted_fit_leaves_other_coordinates_at_zero(small_design):
    fit = oracle_fit(small_design, [1, 0])
    assert fit.support == (0, 1)
    assert fit.gamma_restricted[2] == 0.0 and fit.gamma_restricted[3] == 0.0


def test_singular_restricted_hessian(rng):
    X = rng.normal(size=(10, 2))
    X[:, 1] = X[:, 0]
    design = build_pairwise(CompleteCases(y=rng.normal(size=10), X=X))
    with pytest.raises(OracleError):
        oracle_fit(design, (0, 1))


def test_huge_lambda_prefers_empty_support(small_design):
    best = exhaustive_best_subset(small_design, PenaltySpec("lasso", 1e3))
    assert best.support == ()


def test_strong_orthogonal_signal_matches_lla(tight_config):
    rng = np.random.default_rng(8)
    n = 60
    X = np.column_stack([np.tile([1.0, -1.0], n // 2), np.repeat([1.0, -1.0], n // 2)])
    y = X @ [2.5, -2.0] + 0.5 * rng.normal(size=n)
    design = build_pairwise(CompleteCases(y=y, X=X))
    penalty = PenaltySpec("scad", 0.1 * solver.lambda_max(design))
    best = exhaustive_best_subset(design, penalty)
    fit = solver.fit_lla(design, penalty, tight_config)
    assert best.support == (0, 1)
    assert fit.support == best.support


def test_relabeling_permutes_winner(rng):
    cases = make_cases(rng, n=30, p=3, beta=[0.0, 2.0, 0.0])
    penalty = PenaltySpec("mcp", 0.3)
    best = exhaustive_best_subset(build_pairwise(cases), penalty)
    perm = np.array([2, 0, 1])
    permuted = CompleteCases(y=cases.y, X=cases.X[:, perm])
    best_permuted = exhaustive_best_subset(build_pairwise(permuted), penalty)
    inverse = np.argsort(perm)
    assert best_permuted.support == tuple(sorted(int(inverse[j]) for j in best.support))


def test_enumeration_budget(rng):
    design = build_pairwise(make_cases(rng, n=5, p=16))
    with pytest.raises(BudgetError):
        exhaustive_best_subset(design, PenaltySpec("lasso", 0.1))


def test_finite_diff_single_pair(single_pair):
    np.testing.assert_allclose(finite_diff_grad(single_pair, np.zeros(2)), [-0.5, 0.0], atol=1e-8)


def test_finite_diff_second_order(small_design, rng):
    gamma = 0.3 * rng.normal(size=4)
    exact = small_design.gradient(gamma)
    coarse = np.max(np.abs(finite_diff_grad(small_design, gamma, h=1e-2) - exact))
    fine = np.max(np.abs(finite_diff_grad(small_design, gamma, h=5e-3) - exact))
    assert fine / coarse == pytest.approx(0.25, abs=0.05)


def test_finite_diff_rejects_bad_step(small_design):
    with pytest.raises(ValueError):
        finite_diff_grad(small_design, np.zeros(4), h=0.0)


def _s1_oracle_error(n, rep):
    setting = get_setting("S1", N=n)
    rng = replication_rng(61, rep)
    X = gen_covariates(setting.p, setting.rho, n, rng)
    y = gen_response(setting, X, rng)
    fit = oracle_fit(build_pairwise(CompleteCases(y=y, X=X)), setting.true_support)
    return float(np.max(np.abs(fit.gamma_restricted - setting.gamma_star)))


@pytest.mark.slow
def test_oracle_is_consistent_on_s1_draw():
    assert _s1_oracle_error(2000, 0) <= 0.15


@pytest.mark.slow
def test_oracle_error_shrinks_with_n():
    medians = [np.median([_s1_oracle_error(n, rep) for rep in range(60)])
               for n in (100, 400, 1600)]
    assert medians[0] > medians[1] > medians[2]
