"""Complete cases, the pairwise-difference design and the U-statistic loss.

For complete cases (y_i, x_i), i = 1..n, the loss is

    L(gamma) = 2/(n(n-1)) * sum_{i<j} log(1 + exp(-(y_i - y_j)(x_i - x_j)' gamma))

Pairs with y_i = y_j contribute the constant log 2. The remaining m pairs are
stored as a logistic-regression design without intercept: label
u_k = 1{y_i > y_j} and row v_k = (x_i - x_j)|y_i - y_j|, so that

    L(gamma) = c * logistic_loss(gamma) + (1 - c) * log 2,   c = 2m/(n(n-1)).
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.special import expit

from src.config import settings
from src.core.errors import BudgetError, DataError

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)

GammaVector = np.ndarray


def as_gamma(gamma, p):
    arr = np.asarray(gamma, dtype=float)
    if arr.shape != (p,):
        raise ValueError(f"gamma must have shape ({p},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("gamma must have finite entries")
    return arr


def _frozen(arr):
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CompleteCases:
    y: np.ndarray
    X: np.ndarray
    columns: tuple = ()
    response: str = "y"
    n_total: int = None
    rows: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        y = _frozen(self.y).reshape(-1)
        X = _frozen(np.atleast_2d(self.X))
        if X.shape[0] != y.shape[0]:
            if X.shape[1] == y.shape[0] and X.shape[0] == 1:
                X = _frozen(X.T)
            else:
                raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataError("complete cases must contain finite values only")

        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        if not self.columns:
            object.__setattr__(self, "columns", tuple(f"x{j + 1}" for j in range(X.shape[1])))
        if len(self.columns) != X.shape[1]:
            raise ValueError("one column name per covariate is required")
        if self.n_total is None:
            object.__setattr__(self, "n_total", y.shape[0])
        if self.rows is None:
            object.__setattr__(self, "rows", np.arange(y.shape[0]))

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def observed_fraction(self):
        return self.n / self.n_total if self.n_total else 0.0

    def subset(self, index):
        index = np.asarray(index)
        return CompleteCases(
            y=self.y[index],
            X=self.X[index],
            columns=self.columns,
            response=self.response,
            n_total=len(index),
            rows=self.rows[index],
        )


def read_csv_table(path):
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False)
    except FileNotFoundError:
        raise DataError(f"input file not found: {path}")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"cannot read {path}: {exc}")


def _parse_column(series, name, markers):
    missing = series.isna() | series.astype(str).isin(markers)
    numeric = pd.to_numeric(series.mask(missing), errors="coerce").astype(float)
    bad = ~missing & ~np.isfinite(numeric.to_numpy())
    if bad.any():
        position = int(np.flatnonzero(bad.to_numpy())[0])
        raise DataError(
            f"non-numeric value {series.iloc[position]!r}",
            row=position + 1,
            column=name,
        )
    return numeric.to_numpy(), missing.to_numpy()


def extract_complete_cases(frame, response, covariates=None, na_markers=settings.NA_MARKERS,
                           binarize_at=None):
    """Keep the rows with no missing response or covariate, in their original order."""
    if response not in frame.columns:
        raise DataError(f"unknown response column '{response}'")
    if covariates is None:
        covariates = [c for c in frame.columns if c != response]
    covariates = list(covariates)
    unknown = [c for c in covariates if c not in frame.columns]
    if unknown:
        raise DataError(f"unknown covariate column(s): {', '.join(map(str, unknown))}")
    if not covariates:
        raise DataError("at least one covariate column is required")

    markers = tuple(na_markers)
    y, y_missing = _parse_column(frame[response], response, markers)
    parsed = [_parse_column(frame[c], c, markers) for c in covariates]
    X = np.column_stack([values for values, _ in parsed])
    missing = y_missing.copy()
    for _, column_missing in parsed:
        missing |= column_missing

    keep = np.flatnonzero(~missing)
    if keep.size == 0:
        raise DataError("no complete cases: every row has a missing value")

    y = y[keep]
    if binarize_at is not None:
        y = (y >= binarize_at).astype(float)

    cases = CompleteCases(
        y=y,
        X=X[keep],
        columns=tuple(str(c) for c in covariates),
        response=str(response),
        n_total=len(frame),
        rows=keep,
    )
    logger.info("complete cases: n=%d of N=%d", cases.n, cases.n_total)
    return cases


class PairwiseDesign:
    """Pairwise-difference logistic design built from complete cases.

    Immutable after construction. When m*p fits within the pair budget the
    rows v_k are materialized in ``V``; otherwise ``V`` is None and rows are
    rebuilt block by block from the stored pair indices.
    """

    def __init__(self, cases, standardize=False, pair_budget=settings.PAIR_BUDGET,
                 block_size=settings.PAIR_BLOCK_SIZE):
        if cases.n < 2:
            raise DataError(f"at least 2 complete cases are required, got {cases.n}")

        self.cases = cases
        self.n = cases.n
        self.p = cases.p
        self.block_size = int(block_size)

        first, second = np.triu_indices(self.n, k=1)
        diff = cases.y[first] - cases.y[second]
        keep = diff != 0
        self.pair_i = first[keep]
        self.pair_j = second[keep]
        diff = diff[keep]

        self.m = int(diff.shape[0])
        self.u = _frozen((diff > 0).astype(float))
        self._sign = _frozen(np.where(diff > 0, 1.0, -1.0))
        self._abs_diff = _frozen(np.abs(diff))
        self.c = 2.0 * self.m / (self.n * (self.n - 1))
        self.pair_weight = 2.0 / (self.n * (self.n - 1))

        self.standardized = bool(standardize)
        self.column_scale = np.ones(self.p)
        self.V = None
        if self.m * self.p <= pair_budget:
            self.V = self._build_rows(0, self.m)
            self.V.setflags(write=False)

        if self.standardized and self.m > 0:
            sumsq = np.zeros(self.p)
            for _, _, rows in self._blocks():
                sumsq += np.einsum("ij,ij->j", rows, rows)
            scale = np.sqrt(sumsq / self.m)
            scale[scale == 0] = 1.0
            self.column_scale = scale
            if self.V is not None:
                self.V = _frozen(self.V / scale)
        self.column_scale.setflags(write=False)

        logger.debug("pairwise design: n=%d m=%d p=%d materialized=%s",
                     self.n, self.m, self.p, self.V is not None)

    @property
    def materialized(self):
        return self.V is not None

    @property
    def degenerate(self):
        return self.m == 0

    @property
    def penalty_factor(self):
        return np.ones(self.p)

    @property
    def columns(self):
        return self.cases.columns

    def null_coef(self):
        return np.zeros(self.p)

    def to_original_scale(self, gamma):
        return np.asarray(gamma, dtype=float) / self.column_scale

    def _build_rows(self, start, stop):
        i = self.pair_i[start:stop]
        j = self.pair_j[start:stop]
        rows = (self.cases.X[i] - self.cases.X[j]) * self._abs_diff[start:stop, None]
        if self.V is None:
            rows = rows / self.column_scale
        return rows

    def _blocks(self):
        if self.V is not None:
            yield 0, self.m, self.V
            return
        for start in range(0, self.m, self.block_size):
            stop = min(start + self.block_size, self.m)
            yield start, stop, self._build_rows(start, stop)

    def rows(self):
        if self.V is not None:
            return self.V
        return np.vstack([rows for _, _, rows in self._blocks()]) if self.m else np.zeros((0, self.p))

    def margins(self, gamma):
        """t_k = sign(y_i - y_j) v_k' gamma = (y_i - y_j)(x_i - x_j)' gamma."""
        gamma = as_gamma(gamma, self.p)
        t = np.empty(self.m)
        for start, stop, rows in self._blocks():
            t[start:stop] = rows @ gamma
        return t * self._sign

    def loss(self, gamma):
        t = self.margins(gamma)
        return self.pair_weight * float(np.sum(np.logaddexp(0.0, -t))) + (1.0 - self.c) * LOG2

    def logistic_loss(self, gamma):
        if self.m == 0:
            return LOG2
        t = self.margins(gamma)
        return float(np.mean(np.logaddexp(0.0, -t)))

    def gradient(self, gamma):
        t = self.margins(gamma)
        coef = -self._sign * expit(-t)
        grad = np.zeros(self.p)
        for start, stop, rows in self._blocks():
            grad += rows.T @ coef[start:stop]
        return self.pair_weight * grad

    def curvature(self, gamma):
        t = self.margins(gamma)
        return expit(t) * expit(-t)

    def hessian(self, gamma):
        if self.p > settings.HESSIAN_MAX_DIM:
            raise BudgetError(
                f"p={self.p} exceeds the dense Hessian budget of {settings.HESSIAN_MAX_DIM}; "
                "use hessian_vector() instead (fits switch to it automatically)"
            )
        weights = self.curvature(gamma)
        hess = np.zeros((self.p, self.p))
        for start, stop, rows in self._blocks():
            hess += rows.T @ (rows * weights[start:stop, None])
        hess = self.pair_weight * hess
        return 0.5 * (hess + hess.T)

    def hessian_operator(self, gamma):
        weights = self.curvature(gamma)

        def apply(vector):
            vector = as_gamma(vector, self.p)
            out = np.zeros(self.p)
            for start, stop, rows in self._blocks():
                out += rows.T @ (weights[start:stop] * (rows @ vector))
            return self.pair_weight * out

        return apply

    def hessian_vector(self, gamma, vector):
        return self.hessian_operator(gamma)(vector)


def build_pairwise(cases, standardize=False, pair_budget=settings.PAIR_BUDGET,
                   block_size=settings.PAIR_BLOCK_SIZE):
    return PairwiseDesign(cases, standardize=standardize, pair_budget=pair_budget,
                          block_size=block_size)


def loss(design, gamma):
    return design.loss(gamma)


def gradient(design, gamma):
    return design.gradient(gamma)


def hessian(design, gamma):
    return design.hessian(gamma)


def hessian_vector(design, gamma, vector):
    return design.hessian_vector(gamma, vector)
