import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from src.config import settings


def _check_finite(t):
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("psi functions require finite input")
    return arr


def _as_output(arr, t):
    return float(arr) if np.ndim(t) == 0 else arr


def psi(t):
    """log(1 + e^t), evaluated without overflow for any finite t."""
    arr = _check_finite(t)
    return _as_output(np.logaddexp(0.0, arr), t)


def psi1(t):
    arr = _check_finite(t)
    return _as_output(expit(arr), t)


def psi2(t):
    arr = _check_finite(t)
    return _as_output(expit(arr) * expit(-arr), t)


class PenaltyKind(str, enum.Enum):
    LASSO = "lasso"
    SCAD = "scad"
    MCP = "mcp"

    @property
    def is_concave(self):
        return self is not PenaltyKind.LASSO


DEFAULT_A = {
    PenaltyKind.LASSO: 0.0,
    PenaltyKind.SCAD: settings.SCAD_A,
    PenaltyKind.MCP: settings.MCP_A,
}


@dataclass(frozen=True)
class PenaltySpec:
    kind: PenaltyKind
    lam: float
    a: float = field(default=None)

    def __post_init__(self):
        kind = PenaltyKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.a is None:
            object.__setattr__(self, "a", DEFAULT_A[kind])
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "a", float(self.a))

        if not math.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        if kind is PenaltyKind.SCAD and not self.a > 2:
            raise ValueError(f"SCAD requires a > 2, got {self.a}")
        if kind is PenaltyKind.MCP and not self.a > 0:
            raise ValueError(f"MCP requires a > 0, got {self.a}")

    def with_lambda(self, lam):
        return PenaltySpec(self.kind, lam, self.a)

    @property
    def zeta_minus(self):
        """Lower bound on the slope of q'_lambda, as a positive number."""
        if self.kind is PenaltyKind.SCAD:
            return 1.0 / (self.a - 1.0)
        if self.kind is PenaltyKind.MCP:
            return 1.0 / self.a
        return 0.0


def _nonnegative(t):
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise ValueError("penalty derivatives are defined for t >= 0 only")
    return arr


def penalty_deriv(spec, t):
    arr = _nonnegative(t)
    lam, a = spec.lam, spec.a

    if spec.kind is PenaltyKind.LASSO:
        out = np.full_like(arr, lam)
    elif spec.kind is PenaltyKind.SCAD:
        tail = np.maximum(a * lam - arr, 0.0) / (a - 1.0)
        out = np.where(arr <= lam, lam, tail)
    else:
        out = np.maximum(a * lam - arr, 0.0) / a

    return _as_output(out, t)


def penalty_value(spec, t):
    arr = np.abs(np.asarray(t, dtype=float))
    lam, a = spec.lam, spec.a

    if spec.kind is PenaltyKind.LASSO:
        out = lam * arr
    elif spec.kind is PenaltyKind.SCAD:
        middle = (2.0 * a * lam * arr - arr ** 2 - lam ** 2) / (2.0 * (a - 1.0))
        out = np.where(
            arr <= lam,
            lam * arr,
            np.where(arr <= a * lam, middle, (a + 1.0) * lam ** 2 / 2.0),
        )
    else:
        out = np.where(arr <= a * lam, lam * arr - arr ** 2 / (2.0 * a), a * lam ** 2 / 2.0)

    return _as_output(out, t)


def penalty_total(spec, gamma, penalty_factor=None):
    values = np.asarray(penalty_value(spec, np.asarray(gamma, dtype=float)))
    if penalty_factor is not None:
        values = values * penalty_factor
    return float(np.sum(values))


def q_deriv(spec, t):
    """q'_lambda(t) = p'_lambda(t) - lambda, the concave part's derivative."""
    out = np.asarray(penalty_deriv(spec, t)) - spec.lam
    return _as_output(out, t)
