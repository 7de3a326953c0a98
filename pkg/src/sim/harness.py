"""Replicated selection-accuracy experiments.

Each replication draws one (y, X, R) data set and hands the same draw to every
method, so method comparisons are paired. Replication r uses the random stream
``SeedSequence(base_seed, spawn_key=(r,))``, which makes results independent of
execution order and worker count.
"""
import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from src.config import settings
from src.core import solver
from src.core.cv import cross_validate
from src.core.errors import ConvergenceError, DataError, SimulationError
from src.core.pairwise import CompleteCases, build_pairwise
from src.core.penalties import PenaltyKind, PenaltySpec
from src.sim.generate import simulate
from src.sim.reference import fit_reference_glm, glm_loss_factory

logger = logging.getLogger(__name__)


class Method(str, enum.Enum):
    NO_MISSING = "no_missing"
    MAR_COMPLETE_CASE = "mar"
    PROPOSED = "proposed"


ALL_METHODS = (Method.NO_MISSING, Method.MAR_COMPLETE_CASE, Method.PROPOSED)
ALL_PENALTIES = (PenaltyKind.LASSO, PenaltyKind.SCAD, PenaltyKind.MCP)


@dataclass(frozen=True)
class TuningConfig:
    folds: int = settings.CV_FOLDS
    n_lambda: int = settings.SIM_N_LAMBDA
    lambda_ratio: float = settings.LAMBDA_RATIO
    a: dict = field(default_factory=dict)

    def a_for(self, kind):
        return self.a.get(PenaltyKind(kind))


@dataclass(frozen=True)
class ReplicationRecord:
    rep: int
    method: Method
    penalty: PenaltyKind
    fp: int
    fn: int
    observed_fraction: float
    seconds: float
    chosen_lambda: float
    support: tuple
    objective_trace: tuple = ()


@dataclass(frozen=True)
class RepSummary:
    method: Method
    penalty: PenaltyKind
    fp_mean: float
    fp_sd: float
    fn_mean: float
    fn_sd: float
    reps: int
    mean_observed_fraction: float
    mean_fit_seconds: float
    sd_fit_seconds: float = 0.0


@dataclass(frozen=True)
class SimulationResult:
    setting: object
    summaries: list
    records: list
    excluded: int
    reps: int


def count_fp_fn(support_hat, support_true):
    support_hat = set(support_hat)
    support_true = set(support_true)
    return len(support_hat - support_true), len(support_true - support_hat)


def replication_rng(base_seed, rep):
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(rep,)))


def tune_and_fit(cases, method, family, kind, config, tuning, cv_seed):
    kind = PenaltyKind(kind)
    config = (config or solver.SolverConfig()).for_path()
    a = tuning.a_for(kind)
    if method is Method.PROPOSED:
        factory = build_pairwise
    else:
        factory = glm_loss_factory(family)

    full = factory(cases)
    grid = solver.lambda_path(full, tuning.n_lambda, tuning.lambda_ratio)
    cv = cross_validate(cases, kind, grid, K=tuning.folds, seed=cv_seed, config=config,
                        a=a, loss_factory=factory)
    penalty = PenaltySpec(kind, cv.chosen_lambda, a)

    if method is Method.PROPOSED:
        fit = solver.fit_penalized(full, penalty, config)
    else:
        fit = fit_reference_glm(cases.y, cases.X, family, penalty, config)
    return fit, cv


def run_replication(setting, rep, base_seed, methods=ALL_METHODS, penalties=ALL_PENALTIES,
                    config=None, tuning=None):
    """All (method, penalty) fits on one simulated draw.

    Returns the records, or None with the failure message when any fit fails.
    """
    tuning = tuning or TuningConfig()
    rng = replication_rng(base_seed, rep)
    y, X, R = simulate(setting, rng)
    cv_seed = int(rng.integers(2 ** 31 - 1))
    observed = float(np.mean(R))
    truth = setting.true_support

    everyone = CompleteCases(y=y, X=X, n_total=setting.N)
    observed_rows = np.flatnonzero(R)
    complete = CompleteCases(y=y[observed_rows], X=X[observed_rows], n_total=setting.N,
                             rows=observed_rows)

    records = []
    for method in methods:
        method = Method(method)
        cases = everyone if method is Method.NO_MISSING else complete
        for kind in penalties:
            kind = PenaltyKind(kind)
            start = time.perf_counter()
            try:
                fit, cv = tune_and_fit(cases, method, setting.family, kind, config, tuning, cv_seed)
            except (ConvergenceError, DataError) as exc:
                message = f"replication {rep}: {method.value}/{kind.value} failed: {exc}"
                logger.warning(message)
                return None, message
            seconds = time.perf_counter() - start
            fp, fn = count_fp_fn(fit.support, truth)
            records.append(ReplicationRecord(
                rep=rep,
                method=method,
                penalty=kind,
                fp=fp,
                fn=fn,
                observed_fraction=observed,
                seconds=seconds,
                chosen_lambda=cv.chosen_lambda,
                support=fit.support,
                objective_trace=fit.objective_trace,
            ))
    return records, None


def _sd(values):
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def summarize(records, methods=ALL_METHODS, penalties=ALL_PENALTIES):
    summaries = []
    for method in methods:
        for kind in penalties:
            group = [r for r in records
                     if r.method is Method(method) and r.penalty is PenaltyKind(kind)]
            if not group:
                continue
            fp = np.array([r.fp for r in group], dtype=float)
            fn = np.array([r.fn for r in group], dtype=float)
            seconds = np.array([r.seconds for r in group])
            summaries.append(RepSummary(
                method=Method(method),
                penalty=PenaltyKind(kind),
                fp_mean=float(fp.mean()),
                fp_sd=_sd(fp),
                fn_mean=float(fn.mean()),
                fn_sd=_sd(fn),
                reps=len(group),
                mean_observed_fraction=float(np.mean([r.observed_fraction for r in group])),
                mean_fit_seconds=float(seconds.mean()),
                sd_fit_seconds=_sd(seconds),
            ))
    return summaries


def run_replications(setting, methods=ALL_METHODS, penalties=ALL_PENALTIES, reps=100,
                     base_seed=0, config=None, tuning=None, n_jobs=1, progress=False):
    if reps < 1:
        raise ValueError("reps must be >= 1")
    methods = tuple(Method(m) for m in methods)
    penalties = tuple(PenaltyKind(k) for k in penalties)
    tuning = tuning or TuningConfig()

    jobs = tqdm(range(reps), desc=setting.name, disable=not progress)
    outcomes = Parallel(n_jobs=n_jobs)(
        delayed(run_replication)(setting, rep, base_seed, methods, penalties, config, tuning)
        for rep in jobs
    )

    records = []
    excluded = 0
    for result, _ in outcomes:
        if result is None:
            excluded += 1
        else:
            records.extend(result)

    if excluded > settings.SIM_MAX_EXCLUDED_FRACTION * reps:
        raise SimulationError(
            f"{excluded} of {reps} replications failed (limit "
            f"{settings.SIM_MAX_EXCLUDED_FRACTION:.0%})",
            excluded=excluded,
            reps=reps,
        )
    if excluded:
        logger.warning("%d of %d replications excluded after fit failures", excluded, reps)

    return SimulationResult(
        setting=setting,
        summaries=summarize(records, methods, penalties),
        records=records,
        excluded=excluded,
        reps=reps,
    )
