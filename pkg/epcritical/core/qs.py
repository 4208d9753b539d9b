from dataclasses import dataclass
import logging
from typing import Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from epcritical.core.model import ModelParams
from epcritical.core.ode import EventSpec
from epcritical.core.ode import IvpProblem
from epcritical.core.ode import IvpSolution
from epcritical.core.ode import RhsFunction
from epcritical.core.ode import Termination
from epcritical.core.ode import Tolerances
from epcritical.core.ode import Vector
from epcritical.core.ode import integrate
from epcritical.exceptions import exceptions
import epcritical.utilities.config as cfg

logger = logging.getLogger(__name__)


# ============================================
#                  QSState
# ============================================
@dataclass(frozen=True)
class QSState:
    q: float
    sTilde: float


# ============================================
#               OrbitGeometry
# ============================================
@dataclass(frozen=True)
class OrbitGeometry:
    """
    Closed orbit of the (q, s_tilde) subsystem through a starting point
    (c > 0). `gammaMin` and `gammaMax` bound Gamma along the orbit.
    """

    R: float
    sTilde0: float
    sTildeMin: float
    sTildeMax: float
    period: float
    gammaMin: float
    gammaMax: float
    degenerate: bool


# ============================================
#           trajectory_invariant
# ============================================
def trajectory_invariant(state: QSState, params: ModelParams) -> float:
    """
    The conserved quantity of the (q, s_tilde) subsystem.

    N >= 3: `s~^(-2/N) (q^2 + kc/N + 2k s~/(N-2))`.
    N == 2: `q^2/s~ + k ln s~ + kc/(2 s~)`.

    Raises
    ------
    InvalidStateError
        If `s_tilde <= 0`.
    """
    if not state.sTilde > 0:
        raise exceptions.InvalidStateError("s_tilde", state.sTilde, "s_tilde > 0")
    return float(_invariant(state.q, state.sTilde, params))


# -----
# _invariant
# -----
def _invariant(
    q: float | Vector, sTilde: float | Vector, params: ModelParams
) -> float | Vector:
    k, c, N = params.k, params.c, params.N
    if N == 2:
        return q * q / sTilde + k * np.log(sTilde) + k * c / (2.0 * sTilde)
    return sTilde ** (-2.0 / N) * (q * q + k * c / N + 2.0 * k * sTilde / (N - 2))


# -----
# _section
# -----
def _section(sTilde: float, params: ModelParams) -> float:
    """
    The invariant on the q = 0 axis, minimal at s_tilde = c/N.
    """
    return float(_invariant(0.0, sTilde, params))


# ============================================
#            q_squared_on_orbit
# ============================================
def q_squared_on_orbit(
    sTilde: float | Vector, R: float, params: ModelParams
) -> float | Vector:
    """
    Solves the trajectory relation for q^2 at a given s_tilde.
    """
    k, c, N = params.k, params.c, params.N
    if N == 2:
        return sTilde * (R - k * np.log(sTilde)) - k * c / 2.0
    return R * sTilde ** (2.0 / N) - k * c / N - 2.0 * k * sTilde / (N - 2)


# ============================================
#                 s_extrema
# ============================================
def s_extrema(R: float, params: ModelParams) -> tuple[float, float]:
    """
    The two s_tilde values where the orbit with invariant `R` crosses
    q = 0.

    The q = 0 section decreases on (0, c/N) and increases beyond, so
    each root is bracketed by doubling away from c/N and refined with
    Brent's method.

    Raises
    ------
    InvalidParametersError
        If c = 0 (no lower root; see `s_max_zero_bg`).

    InvalidInvariantError
        If `R` lies below the minimum of the section.
    """
    if not params.hasBackground:
        raise exceptions.InvalidParametersError("c", params.c, "c > 0")

    center = params.cOverN
    gMin = _section(center, params)
    gap = R - gMin
    if gap < -cfg.degenerateOrbitTol * max(1.0, abs(gMin)):
        raise exceptions.InvalidInvariantError(R, gMin)
    if gap <= cfg.degenerateOrbitTol * max(1.0, abs(gMin)):
        return center, center

    def f(x: float) -> float:
        return _section(x, params) - R

    lo = 0.5 * center
    while f(lo) < 0:
        lo *= 0.5
    hi = 2.0 * center
    while f(hi) < 0:
        hi *= 2.0

    sMin = brentq(f, lo, center, xtol=1e-16 * center, rtol=cfg.rootRelTol)
    sMax = brentq(f, center, hi, xtol=1e-16 * center, rtol=cfg.rootRelTol)

    return float(sMin), float(sMax)


# ============================================
#                gamma_of_s
# ============================================
def gamma_of_s(sTilde: float, sTilde0: float, N: int) -> float:
    """
    `Gamma = (s_tilde / s_tilde0)^(1/N)`, equal to `exp(-int_0^t q)`.
    """
    if not sTilde > 0:
        raise exceptions.InvalidStateError("s_tilde", sTilde, "> 0")
    if not sTilde0 > 0:
        raise exceptions.InvalidStateError("s_tilde0", sTilde0, "> 0")
    return float((sTilde / sTilde0) ** (1.0 / N))


# ============================================
#               qs_blowup_check
# ============================================
def qs_blowup_check(s0: float, params: ModelParams) -> bool:
    """
    True when q reaches -infinity in finite time, i.e. `s0 <= -c/N`.
    """
    return s0 <= -params.cOverN


# ============================================
#                   period
# ============================================
def period(q0: float, sTilde0: float, params: ModelParams) -> float:
    """
    Period of the closed orbit through `(q0, s_tilde0)`, c > 0.

    `T = (2/N) int ds~ / (s~ |q|)` between the extrema, with
    `s~ = s_min + (s_max - s_min) sin^2(theta)` removing the square-root
    endpoint singularities. Each half of the theta range is integrated
    with `quad`, measuring q^2 from its nearer extremum so that it never
    cancels to zero. If `quad` misses its tolerance the period is read
    off the q-zero events of the integrated orbit instead. Degenerate
    orbits return the linearized period `2 pi / sqrt(kc)`.

    Raises
    ------
    InvalidParametersError
        If c = 0.

    QuadratureError
        If neither the quadrature nor the event spacing yields a period.
    """
    if not params.hasBackground:
        raise exceptions.InvalidParametersError("c", params.c, "c > 0")

    R = trajectory_invariant(QSState(q0, sTilde0), params)
    sMin, sMax = s_extrema(R, params)
    if sMin == sMax:
        return _linear_period(params)

    value, errEst = _period_quadrature(sMin, sMax, R, params)
    if np.isfinite(value) and errEst <= cfg.periodQuadratureTol * value:
        return value

    logger.debug(
        "period quadrature missed its tolerance (%r); using q-zero events", errEst
    )
    return _event_period(q0, sTilde0, params, value)


# -----
# _linear_period
# -----
def _linear_period(params: ModelParams) -> float:
    return float(2.0 * np.pi / np.sqrt(params.k * params.c))


# -----
# _q_squared_from
# -----
def _q_squared_from(
    sEnd: float, offset: float, R: float, params: ModelParams
) -> float:
    """
    q^2 at `s~ = sEnd + offset` on an orbit that has q = 0 at `sEnd`,
    written as a difference from that extremum.
    """
    k, N = params.k, params.N
    ratio = np.log1p(offset / sEnd)
    if N == 2:
        return float(offset * (R - k * np.log(sEnd)) - k * (sEnd + offset) * ratio)
    growth = R * sEnd ** (2.0 / N) * np.expm1(2.0 * ratio / N)
    return float(growth - 2.0 * k * offset / (N - 2))


# -----
# _period_quadrature
# -----
def _period_quadrature(
    sMin: float, sMax: float, R: float, params: ModelParams
) -> tuple[float, float]:
    width = sMax - sMin
    tiny = np.finfo(float).tiny

    def lower(theta: float) -> float:
        offset = width * np.sin(theta) ** 2
        qSq = max(_q_squared_from(sMin, offset, R, params), tiny)
        return width * np.sin(2.0 * theta) / ((sMin + offset) * np.sqrt(qSq))

    def upper(theta: float) -> float:
        offset = width * np.cos(theta) ** 2
        qSq = max(_q_squared_from(sMax, -offset, R, params), tiny)
        return width * np.sin(2.0 * theta) / ((sMax - offset) * np.sqrt(qSq))

    total = 0.0
    errEst = 0.0
    pieces = ((lower, 0.0, 0.25 * np.pi), (upper, 0.25 * np.pi, 0.5 * np.pi))
    for integrand, lo, hi in pieces:
        part, partErr = quad(
            integrand,
            lo,
            hi,
            epsabs=0.0,
            epsrel=cfg.periodQuadratureTol,
            limit=cfg.periodQuadratureLimit,
        )
        total += part
        errEst += partErr

    scale = 2.0 / params.N
    return float(scale * total), float(scale * errEst)


# -----
# _event_period
# -----
def _event_period(
    q0: float, sTilde0: float, params: ModelParams, estimate: float
) -> float:
    """
    Spacing of every other q-zero along the integrated orbit.
    """
    span = 2.5 * (estimate if np.isfinite(estimate) else _linear_period(params))
    for _attempt in range(cfg.periodEventAttempts):
        traj = integrate_qs(QSState(q0, sTilde0), span, params)
        zeros = traj.qZeroTimes
        if len(zeros) >= 3:
            return float(zeros[2] - zeros[0])
        span *= 2.0

    raise exceptions.QuadratureError("period", np.inf, cfg.periodQuadratureTol)


# ============================================
#               orbit_geometry
# ============================================
def orbit_geometry(q0: float, sTilde0: float, params: ModelParams) -> OrbitGeometry:
    R = trajectory_invariant(QSState(q0, sTilde0), params)
    sMin, sMax = s_extrema(R, params)
    degenerate = sMin == sMax
    T = _linear_period(params) if degenerate else period(q0, sTilde0, params)

    if degenerate:
        gammaMin = gammaMax = 1.0
    else:
        gammaMin = gamma_of_s(sMin, sTilde0, params.N)
        gammaMax = gamma_of_s(sMax, sTilde0, params.N)

    return OrbitGeometry(R, sTilde0, sMin, sMax, T, gammaMin, gammaMax, degenerate)


# ============================================
#                  qs_rhs
# ============================================
def qs_rhs(params: ModelParams) -> RhsFunction:
    """
    `(q, s_tilde, I)` with `I = int_0^t q` carried along for the Gamma
    identity.
    """
    k, N = params.k, params.N
    kcOverN = params.k * params.cOverN

    def rhs(_t: float, y: Vector) -> Vector:
        q, sT, _I = y
        return np.array([k * sT - kcOverN - q * q, -N * q * sT, q])

    return rhs


# ============================================
#                QSTrajectory
# ============================================
@dataclass(frozen=True)
class QSTrajectory:
    """
    Dense trajectory of the (q, s_tilde) subsystem.
    """

    state0: QSState
    params: ModelParams
    solution: IvpSolution
    invariant0: float

    @property
    def qZeroTimes(self) -> list[float]:
        return [ev.time for ev in self.solution.events_named("q_zero")]

    @property
    def sZeroTimes(self) -> list[float]:
        return [ev.time for ev in self.solution.events_named("s_zero")]

    # -----
    # states
    # -----
    def states(self, ts: Vector) -> tuple[Vector, Vector]:
        y = self.solution(np.asarray(ts, dtype=float))
        return y[:, 0], y[:, 1]

    # -----
    # gamma
    # -----
    def gamma(self, ts: Vector) -> Vector:
        _q, sTilde = self.states(ts)
        return (sTilde / self.state0.sTilde) ** (1.0 / self.params.N)

    # -----
    # integral_of_q
    # -----
    def integral_of_q(self, ts: Vector) -> Vector:
        return self.solution(np.asarray(ts, dtype=float))[:, 2]

    # -----
    # invariant_drift
    # -----
    def invariant_drift(self, ts: Vector) -> Vector:
        """
        Drift of the trajectory invariant relative to its initial value.
        """
        q, sTilde = self.states(ts)
        R = _invariant(q, sTilde, self.params)
        scale = abs(self.invariant0) if self.invariant0 != 0 else 1.0
        return (R - self.invariant0) / scale

    # -----
    # orientation_violations
    # -----
    def orientation_violations(self, ts: Vector) -> int:
        """
        Counts samples where `s_tilde'` does not have the sign of `-q`.
        """
        q, sTilde = self.states(ts)
        sDot = -self.params.N * q * sTilde
        moving = q != 0
        return int(np.sum(np.sign(sDot[moving]) != -np.sign(q[moving])))

    # -----
    # rows
    # -----
    def rows(self, n: int) -> list[list[float]]:
        """
        Phase-export rows `t, q, s, s_tilde, gamma, R_drift`.
        """
        ts = np.linspace(self.solution.t0, self.solution.tFinal, n)
        q, sTilde = self.states(ts)
        s = sTilde - self.params.cOverN
        gamma = self.gamma(ts)
        drift = self.invariant_drift(ts)
        return [
            [float(v) for v in row] for row in zip(ts, q, s, sTilde, gamma, drift)
        ]


# ============================================
#                integrate_qs
# ============================================
def integrate_qs(
    state0: QSState,
    tSpan: float | tuple[float, float],
    params: ModelParams,
    tol: Tolerances = Tolerances(),
    events: Sequence[EventSpec] = (),
) -> QSTrajectory:
    """
    Integrates the (q, s_tilde) subsystem with events at q = 0 and
    s = 0 plus any extra `events`.

    Raises
    ------
    InvalidStateError
        If `s_tilde0 <= 0`.

    IntegrationError
        If the integrator stops before the end of the span.
    """
    if not state0.sTilde > 0:
        raise exceptions.InvalidStateError("s_tilde0", state0.sTilde, "> 0")
    if isinstance(tSpan, tuple):
        t0, t1 = float(tSpan[0]), float(tSpan[1])
    else:
        t0, t1 = 0.0, float(tSpan)

    cOverN = params.cOverN
    allEvents = [
        EventSpec(lambda _t, y: y[0], "q_zero"),
        EventSpec(lambda _t, y: y[1] - cOverN, "s_zero"),
        *events,
    ]
    problem = IvpProblem(
        rhs=qs_rhs(params),
        t0=t0,
        y0=np.array([state0.q, state0.sTilde, 0.0]),
        tEnd=t1,
        relTol=tol.rel,
        absTol=tol.abs,
        events=allEvents,
        # s_tilde0 > 0 keeps the orbit bounded; large apexes are not blow-up
        blowupThreshold=np.inf,
    )
    sol = integrate(problem)
    if sol.termination not in (Termination.REACHED_END, Termination.EVENT_STOP):
        raise exceptions.IntegrationError(
            "the q-s subsystem", sol.termination.value, sol.tFinal
        )

    return QSTrajectory(state0, params, sol, trajectory_invariant(state0, params))


# ============================================
#              decay_exponents
# ============================================
def decay_exponents(
    trajectory: QSTrajectory, tWindow: tuple[float, float], nSamples: int = 200
) -> tuple[float, float]:
    """
    Least-squares slopes of `log q` and `log s` against `log(t + 1)`
    over `tWindow` (c = 0). For N = 2 the s fit uses
    `log(s (1 + ln(t + 1)))` to strip the logarithmic correction.

    Raises
    ------
    InvalidStateError
        If q or s is not positive somewhere in the window.
    """
    ts = np.geomspace(tWindow[0] + 1.0, tWindow[1] + 1.0, nSamples) - 1.0
    q, sTilde = trajectory.states(ts)
    s = sTilde - trajectory.params.cOverN
    if np.any(q <= 0) or np.any(s <= 0):
        raise exceptions.InvalidStateError(
            "q, s", float(min(q.min(), s.min())), "> 0 in the decay window"
        )
    logT = np.log(ts + 1.0)
    sFit = s * (1.0 + logT) if trajectory.params.isPlanar else s
    qSlope = np.polyfit(logT, np.log(q), 1)[0]
    sSlope = np.polyfit(logT, np.log(sFit), 1)[0]
    return float(qSlope), float(sSlope)


# ============================================
#               s_max_zero_bg
# ============================================
def s_max_zero_bg(R: float, params: ModelParams) -> float:
    """
    Apex of a c = 0 orbit where q vanishes: `(R (N-2) / 2k)^(N/(N-2))`,
    or `exp(R/k)` for N = 2.

    Raises
    ------
    InvalidInvariantError
        If `R <= 0` for N >= 3 (no orbit with positive s).
    """
    k, N = params.k, params.N
    if N == 2:
        return float(np.exp(R / k))
    if not R > 0:
        raise exceptions.InvalidInvariantError(R, 0.0)
    return float((R * (N - 2) / (2.0 * k)) ** (N / (N - 2)))
