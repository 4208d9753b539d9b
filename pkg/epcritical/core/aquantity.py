from dataclasses import dataclass
from typing import Self

import numpy as np

from epcritical.core.model import ModelParams
from epcritical.core.qs import QSState
from epcritical.core.qs import s_extrema
from epcritical.core.qs import s_max_zero_bg
from epcritical.core.qs import trajectory_invariant
from epcritical.core.ode import Vector


# ============================================
#                 AQuantity
# ============================================
@dataclass(frozen=True)
class AQuantity:
    """
    `A = q w - k eta s` as a closed-form function of Gamma, with its
    unique positive root `kappa` (absent for N >= 3 when
    `1 + A0 (N-2)/k <= 0`). For N = 2 this is the B-quantity.
    """

    A0: float
    kappa: float | None
    planar: bool

    # -----
    # of
    # -----
    @classmethod
    def of(cls, A0: float, params: ModelParams) -> Self:
        return cls(A0, kappa(A0, params), params.isPlanar)


# ============================================
#                 a_of_gamma
# ============================================
def a_of_gamma(
    gamma: float | Vector, A0: float, params: ModelParams
) -> float | Vector:
    """
    N >= 3: `(A0 + k/(N-2)) Gamma - k/(N-2) Gamma^(N-1)`.
    N == 2: `(A0 - k ln Gamma) Gamma`.
    """
    k, N = params.k, params.N
    if N == 2:
        return (A0 - k * np.log(gamma)) * gamma
    lead = k / (N - 2)
    return (A0 + lead) * gamma - lead * gamma ** (N - 1)


# ============================================
#                   kappa
# ============================================
def kappa(A0: float, params: ModelParams) -> float | None:
    """
    Positive root of the closed-form A: `(1 + A0 (N-2)/k)^(1/(N-2))`,
    or `exp(A0/k)` for N = 2. None when the base is nonpositive.
    """
    k, N = params.k, params.N
    if N == 2:
        return float(np.exp(A0 / k))
    base = 1.0 + A0 * (N - 2) / k
    if base <= 0:
        return None
    return float(base ** (1.0 / (N - 2)))


# ============================================
#                  a_window
# ============================================
def a_window(q0: float, s0: float, params: ModelParams) -> tuple[float, float]:
    """
    Open interval of `A0` values whose kappa lies strictly inside the
    Gamma window of the orbit through `(q0, s0)` (c > 0). Empty
    (lo == hi) for the equilibrium orbit.
    """
    k, N = params.k, params.N
    sTilde0 = s0 + params.cOverN
    R = trajectory_invariant(QSState(q0, sTilde0), params)
    sMin, sMax = s_extrema(R, params)
    return _a_of_apex(sMin / sTilde0, k, N), _a_of_apex(sMax / sTilde0, k, N)


# -----
# _a_of_apex
# -----
def _a_of_apex(ratio: float, k: float, N: int) -> float:
    if N == 2:
        return float(0.5 * k * np.log(ratio))
    return float(k / (N - 2) * (ratio ** ((N - 2) / N) - 1.0))


# ============================================
#             a_supremum_zero_bg
# ============================================
def a_supremum_zero_bg(q0: float, s0: float, params: ModelParams) -> float:
    """
    For c = 0: the `A0` at which kappa reaches the orbit apex
    `(s_max/s0)^(1/N)`. With q0 < 0 a global solution needs `A0` below
    this value.
    """
    R = trajectory_invariant(QSState(q0, s0), params)
    return _a_of_apex(s_max_zero_bg(R, params) / s0, params.k, params.N)
