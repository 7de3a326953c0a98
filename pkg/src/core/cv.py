"""K-fold cross-validation of lambda with the pairwise loss as criterion.

Folds partition subjects, not pairs: training and validation designs are
each built from pairs inside one subset, so no subject contributes to both.
"""
import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from sklearn.model_selection import KFold

from src.config import settings
from src.core import solver
from src.core.errors import DataError
from src.core.pairwise import build_pairwise
from src.core.penalties import PenaltyKind

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CvResult:
    lambdas: np.ndarray
    cv_values: np.ndarray
    chosen_lambda: float
    fold_assignment: np.ndarray
    per_fold_values: np.ndarray

    @property
    def chosen_index(self):
        return int(np.flatnonzero(self.lambdas == self.chosen_lambda)[0])

    def curve(self):
        return np.column_stack([self.lambdas, self.cv_values])


def kfold_split(n, K=settings.CV_FOLDS, seed=None):
    if K < 2 or K > n:
        raise ValueError(f"need 2 <= K <= n, got K={K}, n={n}")
    assignment = np.empty(n, dtype=int)
    splitter = KFold(n_splits=K, shuffle=True, random_state=seed)
    for fold, (_, test) in enumerate(splitter.split(np.zeros((n, 1)))):
        assignment[test] = fold
    return assignment


def choose_lambda(lambdas, cv_values):
    lambdas = np.asarray(lambdas, dtype=float)
    cv_values = np.asarray(cv_values, dtype=float)
    best = np.flatnonzero(cv_values == np.min(cv_values))
    return float(np.max(lambdas[best]))


def _on_test_scale(train_loss, test_loss, gamma):
    to_original = getattr(train_loss, "to_original_scale", None)
    if to_original is not None:
        gamma = to_original(gamma)
    scale = getattr(test_loss, "column_scale", None)
    return gamma if scale is None else gamma * scale


def _fold_losses(train_loss, test_loss, grid, kind, a, config):
    fits = solver.fit_path(train_loss, grid, kind, a=a, config=config, warm_start=True)
    return np.array([test_loss.loss(_on_test_scale(train_loss, test_loss, fit.gamma_hat))
                     for fit in fits])


def cross_validate(cases, penalty_kind, grid, K=settings.CV_FOLDS, seed=None, config=None,
                   a=None, loss_factory=build_pairwise, n_jobs=1):
    """CV(lambda) = sum over folds of the held-out loss at the training-fold fit.

    ``loss_factory`` turns a subset of complete cases into a smooth loss; the
    pairwise design by default, a GLM likelihood for the comparator methods.
    Standardized designs scale each fold by its own column scales, so the
    training fit is carried through the original covariate scale before the
    held-out loss is evaluated; every fold is scored on raw pairs.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("lambda grid must be a nonempty vector")
    if grid.size > 1 and np.any(np.diff(grid) >= 0):
        raise ValueError("lambda grid must be strictly descending")

    kind = PenaltyKind(penalty_kind)
    config = config or solver.SolverConfig()
    assignment = kfold_split(cases.n, K, seed)

    tasks = []
    for fold in range(K):
        test_index = np.flatnonzero(assignment == fold)
        train_index = np.flatnonzero(assignment != fold)
        if test_index.size < 2:
            raise DataError(f"fold {fold + 1} has fewer than 2 validation subjects")
        test_loss = loss_factory(cases.subset(test_index))
        if getattr(test_loss, "degenerate", False):
            raise DataError(f"fold {fold + 1} has no informative validation pairs (m = 0)")
        train_loss = loss_factory(cases.subset(train_index))
        tasks.append((train_loss, test_loss))

    rows = Parallel(n_jobs=n_jobs)(
        delayed(_fold_losses)(train, test, grid, kind, a, config) for train, test in tasks
    )
    per_fold = np.vstack(rows)
    cv_values = per_fold.sum(axis=0)
    chosen = choose_lambda(grid, cv_values)
    logger.info("cross-validation (%s, K=%d): chosen lambda %.6g", kind.value, K, chosen)

    return CvResult(
        lambdas=grid,
        cv_values=cv_values,
        chosen_lambda=chosen,
        fold_assignment=assignment,
        per_fold_values=per_fold,
    )
