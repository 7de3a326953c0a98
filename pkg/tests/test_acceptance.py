"""Monte-Carlo checks against the published selection-accuracy tables.

Run with ``pytest --runslow``; the whole module takes tens of minutes.
"""
import numpy as np
import pytest
from joblib import Parallel, delayed

from src.core import solver
from src.core.pairwise import CompleteCases, build_pairwise
from src.core.penalties import PenaltyKind, PenaltySpec
from src.sim.generate import gen_covariates, gen_response
from src.sim.harness import Method, TuningConfig, replication_rng, run_replications, tune_and_fit
from src.sim.scenarios import Family, get_setting
from src.testkit.oracles import exhaustive_best_subset

pytestmark = pytest.mark.slow


def _by_key(result):
    return {(s.method, s.penalty): s for s in result.summaries}


@pytest.fixture(scope="module")
def s1_summary():
    result = run_replications(get_setting("S1", rho=0.0), reps=50, base_seed=2024, n_jobs=-1)
    assert result.excluded <= 5
    return _by_key(result)


def test_s1_proposed_selection_accuracy(s1_summary):
    lasso = s1_summary[(Method.PROPOSED, PenaltyKind.LASSO)]
    scad = s1_summary[(Method.PROPOSED, PenaltyKind.SCAD)]
    mcp = s1_summary[(Method.PROPOSED, PenaltyKind.MCP)]
    assert 1.3 <= lasso.fp_mean <= 3.4
    assert lasso.fn_mean <= 0.1
    assert 0.3 <= scad.fp_mean <= 1.7
    assert 0.2 <= mcp.fp_mean <= 1.4
    assert mcp.fp_mean <= scad.fp_mean <= lasso.fp_mean + 0.5


def test_s1_proposed_is_slower_than_complete_case(s1_summary):
    for kind in PenaltyKind:
        proposed = s1_summary[(Method.PROPOSED, kind)]
        mar = s1_summary[(Method.MAR_COMPLETE_CASE, kind)]
        assert proposed.mean_fit_seconds > mar.mean_fit_seconds


def test_s2_proposed_beats_complete_case():
    result = run_replications(get_setting("S2", rho=0.5),
                              methods=[Method.PROPOSED, Method.MAR_COMPLETE_CASE],
                              penalties=[PenaltyKind.SCAD], reps=30, base_seed=77, n_jobs=-1)
    summary = _by_key(result)
    proposed = summary[(Method.PROPOSED, PenaltyKind.SCAD)]
    mar = summary[(Method.MAR_COMPLETE_CASE, PenaltyKind.SCAD)]
    assert proposed.fp_mean < mar.fp_mean
    assert proposed.fn_mean <= mar.fn_mean + 0.1


def _gradient_norm_at_truth(setting, rep):
    rng = replication_rng(31, rep)
    X = gen_covariates(setting.p, setting.rho, setting.N, rng)
    y = gen_response(setting, X, rng)
    design = build_pairwise(CompleteCases(y=y, X=X))
    assert design.n == setting.N
    return float(np.max(np.abs(design.gradient(setting.gamma_star))))


def test_gradient_at_truth_shrinks_at_root_log_p_over_n_rate():
    p = 10
    medians = []
    for n in (100, 200, 400):
        setting = get_setting("S3", p=p, N=n)
        norms = [_gradient_norm_at_truth(setting, rep) for rep in range(200)]
        medians.append(float(np.median(norms)))
    assert medians[0] > medians[1] > medians[2]
    scaled = [m / np.sqrt(np.log(p) / n) for m, n in zip(medians, (100, 200, 400))]
    assert max(scaled) / min(scaled) <= 2.0


def _logistic_cases(beta, n, rep):
    rng = replication_rng(555, rep)
    setting = get_setting("S3", beta_star=np.asarray(beta, dtype=float), N=n)
    X = gen_covariates(setting.p, 0.0, n, rng)
    y = gen_response(setting, X, rng)
    return setting, CompleteCases(y=y, X=X), int(rng.integers(2 ** 31 - 1))


def _support_recovered(rep):
    beta = [2.0, -2.0, 1.0, -1.0] + [0.0] * 6
    setting, cases, cv_seed = _logistic_cases(beta, 2000, rep)
    fit, _ = tune_and_fit(cases, Method.PROPOSED, Family.LOGISTIC, PenaltyKind.SCAD,
                          solver.SolverConfig(), TuningConfig(n_lambda=20), cv_seed)
    return set(fit.support) == set(setting.true_support)


def test_scad_recovers_true_support():
    hits = Parallel(n_jobs=-1)(delayed(_support_recovered)(rep) for rep in range(50))
    assert np.mean(hits) >= 0.95


def test_scad_matches_exhaustive_oracle_when_small():
    agree = []
    for rep in range(50):
        _, cases, _ = _logistic_cases([2.0, -2.0, 0.0, 0.0], 300, rep)
        design = build_pairwise(cases)
        penalty = PenaltySpec("scad", 0.1 * solver.lambda_max(design))
        fit = solver.fit_lla(design, penalty, solver.SolverConfig().for_path())
        best = exhaustive_best_subset(design, penalty)
        agree.append(fit.support == best.support)
    assert np.mean(agree) >= 0.95
