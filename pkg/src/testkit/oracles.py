import itertools
import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from src.config import settings
from src.core.errors import BudgetError, ConvergenceError
from src.core.penalties import penalty_total

logger = logging.getLogger(__name__)


class OracleError(ConvergenceError):
    pass


@dataclass(frozen=True)
class OracleFit:
    support: tuple
    gamma_restricted: np.ndarray
    loss_value: float
    objective: float = None


def oracle_fit(loss_obj, support, tol=settings.ORACLE_GRAD_TOL, max_iter=settings.ORACLE_MAX_ITER):
    p = loss_obj.null_coef().shape[0]
    support = tuple(sorted(int(j) for j in support))
    gamma = np.zeros(p)
    if not support:
        return OracleFit(support=(), gamma_restricted=gamma, loss_value=loss_obj.loss(gamma))

    index = np.array(support)
    value = loss_obj.loss(gamma)
    for iteration in range(max_iter):
        grad = loss_obj.gradient(gamma)[index]
        if np.max(np.abs(grad)) <= tol:
            return OracleFit(support=support, gamma_restricted=gamma, loss_value=value)

        hess = loss_obj.hessian(gamma)[np.ix_(index, index)]
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            raise OracleError(f"restricted Hessian is singular on support {support}",
                              gamma=gamma, iterations=iteration)
        if not np.all(np.isfinite(step)):
            raise OracleError(f"restricted Hessian is singular on support {support}",
                              gamma=gamma, iterations=iteration)

        t = 1.0
        while True:
            candidate = gamma.copy()
            candidate[index] -= t * step
            candidate_value = loss_obj.loss(candidate)
            if candidate_value <= value or t < 1e-12:
                break
            t *= 0.5
        gamma, value = candidate, candidate_value

    raise OracleError(f"restricted Newton did not converge on support {support}",
                      gamma=gamma, iterations=max_iter)


def _score_support(loss_obj, penalty, support):
    try:
        fit = oracle_fit(loss_obj, support)
    except OracleError:
        return None
    objective = fit.loss_value + penalty_total(penalty, fit.gamma_restricted)
    return OracleFit(support=fit.support, gamma_restricted=fit.gamma_restricted,
                     loss_value=fit.loss_value, objective=objective)


def exhaustive_best_subset(loss_obj, penalty, max_size=None, n_jobs=1):
    """Global minimizer of loss + penalty over all supports up to ``max_size``.

    Objective ties go to the lexicographically smallest support. Supports whose
    restricted fit is singular are skipped.
    """
    p = loss_obj.null_coef().shape[0]
    if p > settings.SUBSET_MAX_P:
        raise BudgetError(f"p={p} exceeds the enumeration budget of 2^{settings.SUBSET_MAX_P}")
    max_size = p if max_size is None else min(int(max_size), p)

    supports = [combo for size in range(max_size + 1)
                for combo in itertools.combinations(range(p), size)]
    scored = Parallel(n_jobs=n_jobs)(
        delayed(_score_support)(loss_obj, penalty, s) for s in supports
    )
    candidates = [fit for fit in scored if fit is not None]
    return min(candidates, key=lambda fit: (fit.objective, fit.support))


def finite_diff_grad(loss_obj, gamma, h=1e-5):
    if not h > 0:
        raise ValueError("h must be positive")
    gamma = np.asarray(gamma, dtype=float)
    grad = np.empty_like(gamma)
    for j in range(gamma.shape[0]):
        step = np.zeros_like(gamma)
        step[j] = h
        grad[j] = (loss_obj.loss(gamma + step) - loss_obj.loss(gamma - step)) / (2.0 * h)
    return grad


def finite_diff_hessian(loss_obj, gamma, h=1e-5):
    gamma = np.asarray(gamma, dtype=float)
    p = gamma.shape[0]
    hess = np.empty((p, p))
    for j in range(p):
        step = np.zeros(p)
        step[j] = h
        hess[:, j] = (loss_obj.gradient(gamma + step) - loss_obj.gradient(gamma - step)) / (2.0 * h)
    return 0.5 * (hess + hess.T)
