import enum
from dataclasses import dataclass, field, replace

import numpy as np


class Family(str, enum.Enum):
    LINEAR_GAUSSIAN = "gaussian"
    LOGISTIC = "logistic"


class MechanismKind(str, enum.Enum):
    TRUNC_Y_AND_X1 = "trunc_y_and_x1"
    X1_GATE_TIMES_LINEAR_Y = "x1_gate_times_linear_y"
    TRUNC_Y_PLUS_X3_AND_X1 = "trunc_y_plus_x3_and_x1"


@dataclass(frozen=True)
class MechanismSpec:
    kind: MechanismKind
    gamma1: float
    gamma2: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", MechanismKind(self.kind))


@dataclass(frozen=True)
class SimSetting:
    name: str
    family: Family
    beta_star: np.ndarray
    mechanism: MechanismSpec
    N: int
    rho: float = 0.0
    alpha: float = 0.0
    phi: float = 1.0
    s_star: int = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        beta = np.array(self.beta_star, dtype=float)
        beta.setflags(write=False)
        object.__setattr__(self, "beta_star", beta)
        if not self.phi > 0:
            raise ValueError("phi must be positive")
        if not 0 <= self.rho < 1:
            raise ValueError("rho must lie in [0, 1)")
        if self.family is Family.LOGISTIC and self.phi != 1.0:
            raise ValueError("the logistic family has phi fixed at 1")
        nonzero = int(np.count_nonzero(beta))
        if self.s_star is None:
            object.__setattr__(self, "s_star", nonzero)
        elif self.s_star != nonzero:
            raise ValueError(f"s_star={self.s_star} but beta_star has {nonzero} nonzeros")

    @property
    def p(self):
        return self.beta_star.shape[0]

    @property
    def gamma_star(self):
        return self.beta_star / self.phi

    @property
    def true_support(self):
        return frozenset(int(j) for j in np.flatnonzero(self.beta_star))


def _padded(head, p):
    beta = np.zeros(p)
    beta[:len(head)] = head
    return beta


LINEAR_BETA = (3.0, 1.5, 0.5)
LOGISTIC_BETA = (2.0, -2.0, 1.0, -1.0)

# name -> (family, beta head, p, N, mechanism kind, {rho: (gamma1, gamma2)})
SCENARIOS = {
    "S1": (Family.LINEAR_GAUSSIAN, LINEAR_BETA, 8, 200, MechanismKind.TRUNC_Y_AND_X1,
           {0.0: (-3.3, -0.4), 0.5: (-3.8, -0.3)}),
    "S2": (Family.LINEAR_GAUSSIAN, LINEAR_BETA, 200, 200, MechanismKind.TRUNC_Y_AND_X1,
           {0.0: (-2.8, -0.4), 0.5: (-4.1, -0.3)}),
    "S3": (Family.LOGISTIC, LOGISTIC_BETA, 8, 500, MechanismKind.X1_GATE_TIMES_LINEAR_Y,
           {0.0: (-0.7, 0.0), 0.5: (-0.7, 0.0)}),
    "S4": (Family.LOGISTIC, LOGISTIC_BETA, 500, 500, MechanismKind.X1_GATE_TIMES_LINEAR_Y,
           {0.0: (-0.7, 0.0), 0.5: (-0.7, 0.0)}),
    "S5": (Family.LINEAR_GAUSSIAN, LINEAR_BETA, 8, 200, MechanismKind.TRUNC_Y_PLUS_X3_AND_X1,
           {0.0: (-3.3, -0.4), 0.5: (-3.8, -0.3)}),
    "S6": (Family.LINEAR_GAUSSIAN, LINEAR_BETA, 200, 200, MechanismKind.TRUNC_Y_PLUS_X3_AND_X1,
           {0.0: (-2.8, -0.4), 0.5: (-4.1, -0.3)}),
}


def get_setting(name, rho=0.0, mechanism=None, **overrides):
    """Build one of S1-S6.

    Published thresholds exist for rho in {0, 0.5}; any other rho needs an
    explicit ``mechanism``. Remaining keyword arguments override fields
    (e.g. ``N`` or ``beta_star`` for downsized runs).
    """
    key = name.upper()
    if key not in SCENARIOS:
        raise ValueError(f"unknown setting '{name}'; choose from {', '.join(SCENARIOS)}")
    family, head, p, N, kind, thresholds = SCENARIOS[key]
    rho = float(rho)

    if mechanism is None:
        if rho not in thresholds:
            raise ValueError(
                f"{key} has published mechanism thresholds for rho in "
                f"{sorted(thresholds)} only; pass a mechanism for rho={rho}"
            )
        gamma1, gamma2 = thresholds[rho]
        mechanism = MechanismSpec(kind, gamma1, gamma2)

    setting = SimSetting(
        name=key,
        family=family,
        beta_star=_padded(head, p),
        mechanism=mechanism,
        N=N,
        rho=rho,
    )
    if overrides:
        if "p" in overrides:
            overrides["beta_star"] = _padded(head, overrides.pop("p"))
        if "beta_star" in overrides:
            overrides.setdefault("s_star", int(np.count_nonzero(overrides["beta_star"])))
        setting = replace(setting, **overrides)
    return setting
