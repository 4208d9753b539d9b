from dataclasses import dataclass
import logging

import numpy as np

from epcritical.core.ode import EventSpec
from epcritical.core.ode import IvpProblem
from epcritical.core.ode import Tolerances
from epcritical.core.ode import Vector
from epcritical.core.ode import integrate
from epcritical.exceptions import exceptions

logger = logging.getLogger(__name__)


# ============================================
#          ConcentrationOutcome
# ============================================
@dataclass(frozen=True)
class ConcentrationOutcome:
    """
    Result of integrating the one-dimensional concentration model
    `a' = k - k c b`, `b' = a` with `a = q / s~` and `b = 1 / s~`.

    The density concentrates exactly when `b` reaches zero.
    """

    concentrates: bool
    minB: float
    horizon: float


# ============================================
#        one_dim_concentration_check
# ============================================
def one_dim_concentration_check(
    q0: float, sTilde0: float, k: float, c: float
) -> bool:
    """
    Closed-form criterion for density concentration in the
    one-dimensional model.

    c > 0: `q0^2 >= k (2 s~0 - c)`.
    c = 0: `q0 < 0` and `q0^2 >= 2 k s~0`.

    Raises
    ------
    InvalidStateError
        If `s~0 <= 0`.
    """
    if not sTilde0 > 0:
        raise exceptions.InvalidStateError("s_tilde0", sTilde0, "> 0")
    if c > 0:
        return q0 * q0 >= k * (2.0 * sTilde0 - c)
    return q0 < 0 and q0 * q0 >= 2.0 * k * sTilde0


# ============================================
#       one_dim_concentration_oracle
# ============================================
def one_dim_concentration_oracle(
    q0: float,
    sTilde0: float,
    k: float,
    c: float,
    tol: Tolerances = Tolerances(),
) -> ConcentrationOutcome:
    """
    Decides concentration by integrating the linear (a, b) system and
    reading `b` at its minima (the upward zeros of `a`).

    c > 0 runs one period `2 pi / sqrt(k c)`. c = 0 runs past the single
    turning point `t = -a0 / k`.
    """
    if not sTilde0 > 0:
        raise exceptions.InvalidStateError("s_tilde0", sTilde0, "> 0")
    a0, b0 = q0 / sTilde0, 1.0 / sTilde0

    if c > 0:
        horizon = 2.0 * np.pi / np.sqrt(k * c)
    else:
        horizon = 2.0 * max(-a0 / k, 0.0) + 1.0

    def rhs(_t: float, y: Vector) -> Vector:
        return np.array([k - k * c * y[1], y[0]])

    sol = integrate(
        IvpProblem(
            rhs=rhs,
            t0=0.0,
            y0=np.array([a0, b0]),
            tEnd=horizon,
            relTol=tol.rel,
            absTol=tol.abs * b0,
            events=[EventSpec(lambda _t, y: y[0], "b_minimum", direction=1)],
        )
    )
    candidates = [b0, float(sol.yFinal[1])]
    candidates += [float(ev.state[1]) for ev in sol.events_named("b_minimum")]
    minB = min(candidates)

    return ConcentrationOutcome(minB <= 1e-9 * b0, minB, horizon)
