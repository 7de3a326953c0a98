import logging
from functools import partial

import numpy as np
from scipy.special import expit, logit

from src.config import settings
from src.core import solver
from src.core.errors import ConvergenceError, DataError
from src.sim.scenarios import Family

logger = logging.getLogger(__name__)


class GlmLoss:

    def __init__(self, y, X, family):
        self.family = Family(family)
        self.y = np.asarray(y, dtype=float)
        X = np.asarray(X, dtype=float)
        self.n, self.p = X.shape
        self.Z = np.column_stack([np.ones(self.n), X])

    @classmethod
    def from_cases(cls, cases, family):
        return cls(cases.y, cases.X, family)

    @property
    def degenerate(self):
        return self.n == 0

    @property
    def penalty_factor(self):
        factor = np.ones(self.p + 1)
        factor[0] = 0.0
        return factor

    def null_coef(self):
        coef = np.zeros(self.p + 1)
        mean = float(np.mean(self.y)) if self.n else 0.0
        if self.family is Family.LINEAR_GAUSSIAN:
            coef[0] = mean
        else:
            if not 0 < mean < 1:
                raise DataError("logistic comparator needs both response classes")
            coef[0] = logit(mean)
        return coef

    def _eta(self, coef):
        coef = np.asarray(coef, dtype=float)
        if coef.shape != (self.p + 1,):
            raise ValueError(f"coefficients must have shape ({self.p + 1},)")
        return self.Z @ coef

    def loss(self, coef):
        eta = self._eta(coef)
        if self.family is Family.LINEAR_GAUSSIAN:
            return float(0.5 * np.mean((self.y - eta) ** 2))
        return float(np.mean(np.logaddexp(0.0, eta) - self.y * eta))

    def gradient(self, coef):
        eta = self._eta(coef)
        if self.family is Family.LINEAR_GAUSSIAN:
            residual = eta - self.y
        else:
            residual = expit(eta) - self.y
        return self.Z.T @ residual / self.n

    def hessian(self, coef):
        if self.family is Family.LINEAR_GAUSSIAN:
            weights = np.ones(self.n)
        else:
            mu = expit(self._eta(coef))
            weights = mu * (1.0 - mu)
        return self.Z.T @ (self.Z * weights[:, None]) / self.n


def glm_loss_factory(family):
    return partial(GlmLoss.from_cases, family=Family(family))


def split_intercept(fit):
    slopes = fit.gamma_hat[1:]
    weights = None if fit.weights is None else fit.weights[1:]
    return solver.FitResult(
        gamma_hat=slopes,
        support=solver.support_of(slopes),
        objective=fit.objective,
        kkt_residual=fit.kkt_residual,
        lla_iterations=fit.lla_iterations,
        objective_trace=fit.objective_trace,
        weights=weights,
        penalty=fit.penalty,
        newton_iterations=fit.newton_iterations,
        cd_sweeps=fit.cd_sweeps,
        intercept=float(fit.gamma_hat[0]),
    )


def fit_reference_glm(y, X, family, penalty, config=None, init=None):
    """Penalized GLM fit with an unpenalized intercept.

    Logistic fits whose linear predictor runs off past the separation bound are
    rejected: the likelihood has no finite minimizer there.
    """
    loss_obj = GlmLoss(y, X, family)
    if loss_obj.n == 0:
        raise DataError("no subjects to fit")
    fit = solver.fit_penalized(loss_obj, penalty, config, init=init)

    if loss_obj.family is Family.LOGISTIC:
        eta = loss_obj.Z @ fit.gamma_hat
        if np.max(np.abs(eta)) > settings.SEPARATION_ETA:
            raise ConvergenceError(
                "logistic comparator diverges: the data are (quasi-)separable "
                f"at lambda={penalty.lam:.4g}",
                gamma=fit.gamma_hat,
                kkt_residual=fit.kkt_residual,
                iterations=fit.newton_iterations,
                objective_trace=fit.objective_trace,
            )
    return split_intercept(fit)
