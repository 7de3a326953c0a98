"""Weighted-L1 and folded-concave minimization of a smooth convex loss.

The smooth loss is any object exposing ``loss``, ``gradient``, ``hessian``,
``penalty_factor`` and ``null_coef``; both the pairwise design and the
penalized GLM comparator qualify.

``fit_weighted_l1`` is a proximal Newton method: at each outer step the loss is
replaced by its exact second-order expansion and the resulting weighted-L1
quadratic is minimized by cyclic coordinate descent with an active set, or by
accelerated proximal gradient on Hessian-vector products above the dense
Hessian budget. A backtracking line search on the true penalized objective
keeps every outer step monotone. ``fit_lla`` wraps it in the local linear
approximation loop for SCAD and MCP; grid and CV fits use the larger
``PATH_LLA_MAX_ITER`` cap.
"""
import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from src.config import settings
from src.core.errors import ConvergenceError, DataError
from src.core.penalties import PenaltyKind, PenaltySpec, penalty_deriv, penalty_total

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    cd_tol: float = settings.CD_TOL
    cd_max_sweeps: int = settings.CD_MAX_SWEEPS
    newton_max_iter: int = settings.NEWTON_MAX_ITER
    lla_tol: float = settings.LLA_TOL
    lla_max_iter: int = settings.LLA_MAX_ITER
    kkt_tol: float = settings.KKT_TOL

    def __post_init__(self):
        for name in ("cd_tol", "lla_tol", "kkt_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("cd_max_sweeps", "newton_max_iter", "lla_max_iter"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def as_dict(self):
        return asdict(self)

    def for_path(self):
        return replace(self, lla_max_iter=max(self.lla_max_iter, settings.PATH_LLA_MAX_ITER))


@dataclass(frozen=True)
class FitResult:
    gamma_hat: np.ndarray
    support: tuple
    objective: float
    kkt_residual: float
    lla_iterations: int = 0
    objective_trace: tuple = ()
    weights: np.ndarray = field(default=None, repr=False)
    penalty: PenaltySpec = None
    newton_iterations: int = 0
    cd_sweeps: int = 0
    intercept: float = 0.0
    iterate_history: tuple = field(default=(), repr=False)
    weight_history: tuple = field(default=(), repr=False)

    @property
    def lam(self):
        return None if self.penalty is None else self.penalty.lam


def support_of(gamma):
    return tuple(int(j) for j in np.flatnonzero(np.asarray(gamma) != 0))


def kkt_residual(grad, gamma, weights):
    grad = np.asarray(grad, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if grad.size == 0:
        return 0.0
    active = gamma != 0
    residual = np.where(
        active,
        np.abs(grad + weights * np.sign(gamma)),
        np.maximum(np.abs(grad) - weights, 0.0),
    )
    return float(np.max(residual))


def _soft_threshold(z, w):
    if z > w:
        return z - w
    if z < -w:
        return z + w
    return 0.0


def _quadratic_objective(hess, grad, center, x, weights):
    d = x - center
    return float(grad @ d + 0.5 * d @ hess @ d + np.sum(weights * np.abs(x)))


def solve_weighted_quadratic(hess, grad, center, weights, tol=settings.CD_TOL,
                             max_sweeps=settings.CD_MAX_SWEEPS, start=None):
    """Minimize g'(x-c) + (x-c)'H(x-c)/2 + sum_j w_j |x_j| by coordinate descent.

    Returns the minimizer, the number of sweeps used and the objective value
    after every full sweep.
    """
    p = grad.shape[0]
    x = np.array(center if start is None else start, dtype=float)
    resid = grad + hess @ (x - center)
    diag = np.diag(hess).copy()
    weights = np.asarray(weights, dtype=float)
    trace = []
    sweeps = 0

    def sweep(coords):
        biggest = 0.0
        for j in coords:
            h = diag[j]
            if h <= 0.0:
                continue
            old = x[j]
            new = _soft_threshold(h * old - resid[j], weights[j]) / h
            if new != old:
                delta = new - old
                x[j] = new
                resid[:] += hess[j] * delta
                biggest = max(biggest, abs(delta))
        return biggest

    everything = range(p)
    while True:
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"coordinate descent did not converge in {max_sweeps} sweeps",
                gamma=x.copy(),
                iterations=sweeps,
                objective_trace=trace,
            )
        change = sweep(everything)
        sweeps += 1
        trace.append(_quadratic_objective(hess, grad, center, x, weights))
        if change <= tol:
            break

        active = np.flatnonzero(x != 0)
        while active.size and sweeps < max_sweeps:
            change = sweep(active)
            sweeps += 1
            if change <= tol:
                break

    return x, sweeps, trace


def _operator_norm(hvp, p):
    v = np.full(p, 1.0 / math.sqrt(p))
    norm = 0.0
    for _ in range(settings.POWER_ITERATIONS):
        w = hvp(v)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
    return norm


def solve_weighted_quadratic_operator(hvp, grad, center, weights, tol=settings.CD_TOL,
                                      max_iter=settings.CD_MAX_SWEEPS, start=None):
    """Accelerated proximal gradient on the same quadratic, given only v -> Hv.

    Used when the dense Hessian is over budget. Returns the minimizer and the
    number of iterations.
    """
    p = grad.shape[0]
    weights = np.asarray(weights, dtype=float)
    x = np.array(center if start is None else start, dtype=float)
    step = 1.05 * _operator_norm(hvp, p)
    if step <= 0.0:
        step = 1.0
    z = x.copy()
    t = 1.0

    for iteration in range(1, max_iter + 1):
        moved = z - (grad + hvp(z - center)) / step
        new = np.sign(moved) * np.maximum(np.abs(moved) - weights / step, 0.0)
        change = float(np.max(np.abs(new - x))) if p else 0.0
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        z = new + ((t - 1.0) / t_next) * (new - x)
        x, t = new, t_next
        if change <= tol:
            return x, iteration

    raise ConvergenceError(
        f"proximal gradient did not converge in {max_iter} iterations",
        gamma=x.copy(),
        iterations=max_iter,
    )


def _uses_operator(loss_obj, p):
    return p > settings.HESSIAN_MAX_DIM and hasattr(loss_obj, "hessian_operator")


def _penalized(loss_obj, gamma, weights):
    return loss_obj.loss(gamma) + float(np.sum(weights * np.abs(gamma)))


def _line_search(loss_obj, gamma, direction, grad, weights, current):
    decrease = float(grad @ direction
                     + np.sum(weights * (np.abs(gamma + direction) - np.abs(gamma))))
    decrease = min(decrease, 0.0)
    t = 1.0
    for _ in range(settings.LINE_SEARCH_MAX_HALVINGS):
        candidate = gamma + t * direction
        value = _penalized(loss_obj, candidate, weights)
        if value <= current + settings.ARMIJO_SIGMA * t * decrease:
            return t, candidate, value
        t *= settings.LINE_SEARCH_SHRINK
    return 0.0, gamma, current


def _check_weights(weights, p):
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (p,):
        raise ValueError(f"weights must have shape ({p},), got {weights.shape}")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise ValueError("weights must be finite and nonnegative")
    return weights


def _minimize_weighted_l1(loss_obj, weights, config, init):
    p = loss_obj.null_coef().shape[0]
    gamma = loss_obj.null_coef() if init is None else np.array(init, dtype=float)
    if gamma.shape != (p,):
        raise ValueError(f"init must have shape ({p},)")

    current = _penalized(loss_obj, gamma, weights)
    sweeps_total = 0
    kkt = math.inf

    for iteration in range(config.newton_max_iter + 1):
        grad = loss_obj.gradient(gamma)
        kkt = kkt_residual(grad, gamma, weights)
        if kkt <= config.kkt_tol:
            return gamma, kkt, iteration, sweeps_total, current
        if iteration == config.newton_max_iter:
            break

        remaining = max(config.cd_max_sweeps - sweeps_total, 1)
        if _uses_operator(loss_obj, p):
            target, sweeps = solve_weighted_quadratic_operator(
                loss_obj.hessian_operator(gamma), grad, gamma, weights,
                tol=config.cd_tol, max_iter=remaining,
            )
        else:
            target, sweeps, _ = solve_weighted_quadratic(
                loss_obj.hessian(gamma), grad, gamma, weights,
                tol=config.cd_tol, max_sweeps=remaining,
            )
        sweeps_total += sweeps
        direction = target - gamma
        t, gamma, current = _line_search(loss_obj, gamma, direction, grad, weights, current)
        step = t * float(np.max(np.abs(direction))) if direction.size else 0.0
        logger.debug("newton %d: objective=%.12g kkt=%.3g step=%.3g",
                     iteration, current, kkt, step)

        if sweeps_total >= config.cd_max_sweeps:
            raise ConvergenceError(
                f"coordinate descent budget of {config.cd_max_sweeps} sweeps exhausted",
                gamma=gamma, kkt_residual=kkt, iterations=iteration + 1,
            )

    raise ConvergenceError(
        f"weighted-L1 solver did not reach KKT tolerance {config.kkt_tol} "
        f"in {config.newton_max_iter} Newton steps (residual {kkt:.3g})",
        gamma=gamma, kkt_residual=kkt, iterations=config.newton_max_iter,
    )


def fit_weighted_l1(loss_obj, weights, config=None, init=None):
    config = config or SolverConfig()
    p = loss_obj.null_coef().shape[0]
    weights = _check_weights(weights, p) * loss_obj.penalty_factor
    gamma, kkt, newton, sweeps, objective = _minimize_weighted_l1(loss_obj, weights, config, init)
    return FitResult(
        gamma_hat=gamma,
        support=support_of(gamma),
        objective=objective,
        kkt_residual=kkt,
        objective_trace=(objective,),
        weights=weights,
        newton_iterations=newton,
        cd_sweeps=sweeps,
    )


def fit_lasso(loss_obj, lam, config=None, init=None):
    penalty = PenaltySpec(PenaltyKind.LASSO, lam)
    p = loss_obj.null_coef().shape[0]
    fit = fit_weighted_l1(loss_obj, np.full(p, penalty.lam), config, init=init)
    objective = loss_obj.loss(fit.gamma_hat) + penalty_total(penalty, fit.gamma_hat,
                                                            loss_obj.penalty_factor)
    return FitResult(
        gamma_hat=fit.gamma_hat,
        support=fit.support,
        objective=objective,
        kkt_residual=fit.kkt_residual,
        objective_trace=(objective,),
        weights=fit.weights,
        penalty=penalty,
        newton_iterations=fit.newton_iterations,
        cd_sweeps=fit.cd_sweeps,
    )


def fit_lla(loss_obj, penalty, config=None, init=None):
    config = config or SolverConfig()
    if not penalty.kind.is_concave:
        raise ValueError("fit_lla requires a SCAD or MCP penalty")

    newton = sweeps = 0
    if init is None:
        start = fit_lasso(loss_obj, penalty.lam, config)
        gamma = start.gamma_hat
        newton, sweeps = start.newton_iterations, start.cd_sweeps
    else:
        gamma = np.array(init, dtype=float)

    factor = loss_obj.penalty_factor

    def objective(g):
        return loss_obj.loss(g) + penalty_total(penalty, g, factor)

    trace = [objective(gamma)]
    iterates = [gamma]
    weight_history = []

    for iteration in range(1, config.lla_max_iter + 1):
        weights = np.asarray(penalty_deriv(penalty, np.abs(gamma)), dtype=float)
        weight_history.append(weights)
        fit = fit_weighted_l1(loss_obj, weights, config, init=gamma)
        newton += fit.newton_iterations
        sweeps += fit.cd_sweeps
        change = float(np.max(np.abs(fit.gamma_hat - gamma))) if gamma.size else 0.0
        gamma = fit.gamma_hat
        iterates.append(gamma)
        trace.append(objective(gamma))
        logger.debug("lla %d: objective=%.12g change=%.3g", iteration, trace[-1], change)

        if change <= config.lla_tol:
            return FitResult(
                gamma_hat=gamma,
                support=support_of(gamma),
                objective=trace[-1],
                kkt_residual=fit.kkt_residual,
                lla_iterations=iteration,
                objective_trace=tuple(trace),
                weights=fit.weights,
                penalty=penalty,
                newton_iterations=newton,
                cd_sweeps=sweeps,
                iterate_history=tuple(iterates),
                weight_history=tuple(weight_history),
            )

    raise ConvergenceError(
        f"LLA did not converge in {config.lla_max_iter} iterations",
        gamma=gamma, iterations=config.lla_max_iter, objective_trace=trace,
    )


def fit_penalized(loss_obj, penalty, config=None, init=None):
    if penalty.kind is PenaltyKind.LASSO:
        return fit_lasso(loss_obj, penalty.lam, config, init=init)
    return fit_lla(loss_obj, penalty, config, init=init)


def lambda_max(loss_obj):
    if getattr(loss_obj, "degenerate", False):
        raise DataError("degenerate design: no informative pairs (m = 0)")
    grad = loss_obj.gradient(loss_obj.null_coef()) * loss_obj.penalty_factor
    return float(np.max(np.abs(grad))) if grad.size else 0.0


def lambda_path(loss_obj, n_lambda=settings.N_LAMBDA, ratio=settings.LAMBDA_RATIO):
    if n_lambda < 2:
        raise ValueError("n_lambda must be >= 2")
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    top = lambda_max(loss_obj)
    if not top > 0:
        raise DataError("gradient vanishes at the null model; no lambda path exists")
    return np.geomspace(top, ratio * top, int(n_lambda))


def fit_path(loss_obj, lambdas, kind, a=None, config=None, warm_start=True):
    """Fit every lambda of a grid; LASSO fits are warm-started along the grid.

    SCAD/MCP fits run the full LLA pipeline at each lambda, initialized at the
    LASSO solution for that lambda, under the path LLA cap.
    """
    config = (config or SolverConfig()).for_path()
    kind = PenaltyKind(kind)
    fits = []
    previous = None
    for lam in lambdas:
        lasso = fit_lasso(loss_obj, lam, config, init=previous if warm_start else None)
        if warm_start:
            previous = lasso.gamma_hat
        if kind is PenaltyKind.LASSO:
            fits.append(lasso)
        else:
            penalty = PenaltySpec(kind, lam, a)
            fits.append(fit_lla(loss_obj, penalty, config, init=lasso.gamma_hat))
    return fits
