import numpy as np
from scipy.special import expit

from src.sim.scenarios import Family, MechanismKind


def ar1_covariance(p, rho):
    index = np.arange(p)
    return rho ** np.abs(index[:, None] - index[None, :])


def gen_covariates(p, rho, N, rng):
    """N rows of N(0, Sigma) with Sigma_ij = rho^|i-j|.

    Columns are generated sequentially, X_j = rho X_{j-1} + sqrt(1 - rho^2) Z_j,
    which keeps every marginal at unit variance.
    """
    if not 0 <= rho < 1:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    Z = rng.standard_normal((N, p))
    X = np.empty((N, p))
    X[:, 0] = Z[:, 0]
    scale = np.sqrt(1.0 - rho ** 2)
    for j in range(1, p):
        X[:, j] = rho * X[:, j - 1] + scale * Z[:, j]
    return X


def linear_predictor(setting, X):
    if X.shape[1] != setting.p:
        raise ValueError(f"X has {X.shape[1]} columns, setting expects p={setting.p}")
    return setting.alpha + X @ setting.beta_star


def gen_response(setting, X, rng):
    eta = linear_predictor(setting, X)
    if setting.family is Family.LINEAR_GAUSSIAN:
        return eta + np.sqrt(setting.phi) * rng.standard_normal(eta.shape[0])
    return (rng.uniform(size=eta.shape[0]) < expit(eta)).astype(float)


def response_probability(mechanism, y, X):
    if mechanism.kind is MechanismKind.TRUNC_Y_AND_X1:
        prob = (y > mechanism.gamma1) & (X[:, 0] > mechanism.gamma2)
    elif mechanism.kind is MechanismKind.X1_GATE_TIMES_LINEAR_Y:
        prob = (X[:, 0] > mechanism.gamma1) * (2.0 * y + 3.0) / 5.0
    else:
        prob = (y + 0.1 * X[:, 2] > mechanism.gamma1) & (X[:, 0] > mechanism.gamma2)
    return np.asarray(prob, dtype=float)


def apply_missingness(mechanism, y, X, rng):
    if X.shape[0] != y.shape[0]:
        raise ValueError("y and X must have the same number of subjects")
    prob = response_probability(mechanism, y, X)
    if np.any(prob < 0) or np.any(prob > 1) or not np.all(np.isfinite(prob)):
        raise ValueError(f"{mechanism.kind.value} produced probabilities outside [0, 1]")
    return rng.uniform(size=y.shape[0]) < prob


def simulate(setting, rng):
    X = gen_covariates(setting.p, setting.rho, setting.N, rng)
    y = gen_response(setting, X, rng)
    R = apply_missingness(setting.mechanism, y, X, rng)
    return y, X, R
