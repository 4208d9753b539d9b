from collections import deque
from dataclasses import dataclass
from dataclasses import field
from enum import Enum
import logging
from typing import Callable
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import RK45
from scipy.optimize import brentq

from epcritical.core.model import CharData
from epcritical.core.model import ModelParams
from epcritical.exceptions import exceptions
import epcritical.utilities.config as cfg

logger = logging.getLogger(__name__)

Vector = NDArray[np.float64]
RhsFunction = Callable[[float, Vector], Vector]
EventFunction = Callable[[float, Vector], float]

# Dormand-Prince 5(4) tableau with its quartic continuous extension
_A = RK45.A
_B = RK45.B
_C = RK45.C
_E = RK45.E
_P = RK45.P
_nStages = RK45.n_stages

# PI step-size controller
_safety = 0.9
_minFactor = 0.2
_maxFactor = 10.0
_beta = 0.04
_expo = 1.0 / 5.0 - 0.75 * _beta


# ============================================
#                Termination
# ============================================
class Termination(str, Enum):
    REACHED_END = "ReachedEnd"
    EVENT_STOP = "EventStop"
    BLOWUP = "BlowupDetected"
    TOLERANCE_FAILURE = "ToleranceFailure"


# ============================================
#                Tolerances
# ============================================
@dataclass(frozen=True)
class Tolerances:
    rel: float = cfg.classifyRelTol
    abs: float = cfg.classifyAbsTol

    # -----
    # __post_init__
    # -----
    def __post_init__(self) -> None:
        if not self.rel > 0:
            raise exceptions.InvalidParametersError("rel_tol", self.rel, "> 0")
        if not self.abs > 0:
            raise exceptions.InvalidParametersError("abs_tol", self.abs, "> 0")


# ============================================
#                 EventSpec
# ============================================
@dataclass(frozen=True)
class EventSpec:
    """
    Scalar event function. `direction` filters crossings by the sign
    change seen in integration order: +1 for negative to positive, -1
    for positive to negative, 0 for both.
    """

    function: EventFunction
    name: str
    direction: int = 0
    terminal: bool = False


# ============================================
#                EventRecord
# ============================================
@dataclass(frozen=True)
class EventRecord:
    time: float
    index: int
    name: str
    state: Vector
    residual: float


# ============================================
#                 IvpProblem
# ============================================
@dataclass(frozen=True)
class IvpProblem:
    """
    Initial value problem handed to `integrate`.

    `blowupComponents` restricts the blow-up norm to a subset of the
    state; None watches every component. `fixedStep` switches off error
    control entirely and is meant for order checks only.
    """

    rhs: RhsFunction
    t0: float
    y0: Vector
    tEnd: float
    relTol: float = cfg.classifyRelTol
    absTol: float = cfg.classifyAbsTol
    events: Sequence[EventSpec] = ()
    blowupThreshold: float = cfg.blowupThreshold
    blowupComponents: tuple[int, ...] | None = None
    firstStep: float | None = None
    fixedStep: float | None = None
    maxSteps: int = cfg.maxSteps

    # -----
    # __post_init__
    # -----
    def __post_init__(self) -> None:
        y0 = np.array(self.y0, dtype=float, ndmin=1)
        if not np.all(np.isfinite(y0)):
            raise exceptions.InvalidStateError("y0", float("nan"), "finite")
        if self.tEnd == self.t0:
            raise exceptions.InvalidParametersError("t_end", self.tEnd, "t_end != t0")
        if not self.relTol > 0 or not self.absTol > 0:
            raise exceptions.InvalidParametersError(
                "tolerances", (self.relTol, self.absTol), "both > 0"
            )
        if self.fixedStep is not None and not self.fixedStep > 0:
            raise exceptions.InvalidParametersError("fixed_step", self.fixedStep, "> 0")
        object.__setattr__(self, "y0", y0)

    @property
    def dimension(self) -> int:
        return int(self.y0.size)


# ============================================
#                IvpSolution
# ============================================
@dataclass
class IvpSolution:
    """
    Accepted steps, dense output and events of one integration.

    Calling the solution evaluates the dense output anywhere between
    `t0` and `tFinal`.
    """

    ts: Vector
    ys: NDArray[np.float64]
    termination: Termination
    events: list[EventRecord] = field(default_factory=list)
    tcEstimate: float | None = None
    message: str = ""
    nSteps: int = 0
    nRejected: int = 0
    segT0: Vector = field(default_factory=lambda: np.empty(0))
    segH: Vector = field(default_factory=lambda: np.empty(0))
    segY0: NDArray[np.float64] = field(default_factory=lambda: np.empty((0, 0)))
    segQ: NDArray[np.float64] = field(default_factory=lambda: np.empty((0, 0, 4)))

    @property
    def t0(self) -> float:
        return float(self.ts[0])

    @property
    def tFinal(self) -> float:
        return float(self.ts[-1])

    @property
    def yFinal(self) -> Vector:
        return self.ys[-1]

    @property
    def direction(self) -> float:
        return 1.0 if self.tFinal >= self.t0 else -1.0

    @property
    def success(self) -> bool:
        return self.termination in (Termination.REACHED_END, Termination.EVENT_STOP)

    # -----
    # __call__
    # -----
    def __call__(self, t: float | Vector) -> Vector:
        tArr = np.atleast_1d(np.asarray(t, dtype=float))
        if self.segT0.size == 0:
            out = np.repeat(self.ys[:1], tArr.size, axis=0)
        else:
            out = _evaluate_dense(
                tArr, self.direction, self.segT0, self.segH, self.segY0, self.segQ
            )
        return out[0] if np.ndim(t) == 0 else out

    # -----
    # events_named
    # -----
    def events_named(self, name: str) -> list[EventRecord]:
        return [ev for ev in self.events if ev.name == name]

    # -----
    # first_event
    # -----
    def first_event(self, name: str) -> EventRecord | None:
        found = self.events_named(name)
        return found[0] if found else None

    # -----
    # sample
    # -----
    def sample(self, n: int) -> tuple[Vector, NDArray[np.float64]]:
        """
        Evenly spaced samples of the dense output over the covered span.
        """
        ts = np.linspace(self.t0, self.tFinal, n)
        return ts, self(ts)


# ============================================
#               _evaluate_dense
# ============================================
def _evaluate_dense(
    tArr: Vector,
    direction: float,
    segT0: Vector,
    segH: Vector,
    segY0: NDArray[np.float64],
    segQ: NDArray[np.float64],
) -> NDArray[np.float64]:
    idx = np.searchsorted(direction * segT0, direction * tArr, side="right") - 1
    idx = np.clip(idx, 0, segT0.size - 1)
    x = (tArr - segT0[idx]) / segH[idx]
    powers = np.cumprod(np.repeat(x[:, None], 4, axis=1), axis=1)
    return segY0[idx] + segH[idx][:, None] * np.einsum("mnk,mk->mn", segQ[idx], powers)


# ============================================
#                 _rk_step
# ============================================
def _rk_step(
    fun: RhsFunction, t: float, y: Vector, f: Vector, h: float
) -> tuple[Vector, Vector, Vector, NDArray[np.float64]]:
    """
    One Dormand-Prince step with the first-same-as-last stage.

    Returns
    -------
    yNew, fNew, err, K
        New state, its derivative, the embedded error estimate and the
        stage derivatives (needed for dense output).
    """
    K = np.empty((_nStages + 1, y.size))
    K[0] = f
    for s, (a, c) in enumerate(zip(_A[1:], _C[1:]), start=1):
        dy = K[:s].T @ a[:s] * h
        K[s] = fun(t + c * h, y + dy)
    yNew = y + h * (K[:-1].T @ _B)
    fNew = fun(t + h, yNew)
    K[-1] = fNew
    err = h * (K.T @ _E)
    return yNew, fNew, err, K


# -----
# _rms
# -----
def _rms(x: Vector) -> float:
    return float(np.sqrt(np.mean(x * x)))


# ============================================
#               _initial_step
# ============================================
def _initial_step(
    fun: RhsFunction,
    t0: float,
    y0: Vector,
    f0: Vector,
    direction: float,
    relTol: float,
    absTol: float,
    span: float,
) -> float:
    """
    Starting step from the local scale of the solution and its first
    two derivatives.
    """
    scale = absTol + np.abs(y0) * relTol
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)

    f1 = fun(t0 + direction * h0, y0 + direction * h0 * f0)
    if not np.all(np.isfinite(f1)):
        return h0 * 1e-2
    d2 = _rms((f1 - f0) / scale) / h0

    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)

    return min(100 * h0, h1, span)


# ============================================
#                 integrate
# ============================================
def integrate(problem: IvpProblem) -> IvpSolution:
    """
    Integrates an initial value problem with the Dormand-Prince 5(4)
    pair and PI step control.

    Events are bracketed by sign changes between accepted steps and
    refined with Brent's method on the dense output. Blow-up is declared
    when the watched norm exceeds `problem.blowupThreshold`, or when the
    step size collapses while the vector field grows quadratically with
    the state; the breakdown time is then extrapolated as
    `t + |y| / |f|`, which is exact for `y' = -y^2`.

    Parameters
    ----------
    problem : IvpProblem
        The problem to solve.

    Returns
    -------
    IvpSolution
        Never raises on numerical failure; check `termination`.
    """

    def fun(t: float, y: Vector) -> Vector:
        return np.asarray(problem.rhs(t, y), dtype=float)

    t = float(problem.t0)
    y = problem.y0.copy()
    f = fun(t, y)
    tEnd = float(problem.tEnd)
    direction = 1.0 if tEnd > t else -1.0
    span = abs(tEnd - t)
    hMin = cfg.stepCollapseFactor * span
    watch = (
        np.arange(y.size)
        if problem.blowupComponents is None
        else np.asarray(problem.blowupComponents)
    )

    ts = [t]
    ys = [y.copy()]
    segT0: list[float] = []
    segH: list[float] = []
    segY0: list[Vector] = []
    segQ: list[NDArray[np.float64]] = []
    events: list[EventRecord] = []
    recentNorms: deque[float] = deque(maxlen=8)

    def finish(
        termination: Termination, tc: float | None = None, msg: str = ""
    ) -> IvpSolution:
        n = y.size
        return IvpSolution(
            ts=np.asarray(ts),
            ys=np.asarray(ys).reshape(len(ts), n),
            termination=termination,
            events=events,
            tcEstimate=tc,
            message=msg,
            nSteps=nSteps,
            nRejected=nRejected,
            segT0=np.asarray(segT0),
            segH=np.asarray(segH),
            segY0=np.asarray(segY0).reshape(len(segT0), n),
            segQ=np.asarray(segQ).reshape(len(segT0), n, 4),
        )

    nSteps = 0
    nRejected = 0

    if not np.all(np.isfinite(f)):
        return finish(Termination.TOLERANCE_FAILURE, msg="rhs not finite at y0")

    gOld = [float(ev.function(t, y)) for ev in problem.events]

    if problem.fixedStep is not None:
        h = problem.fixedStep
    elif problem.firstStep is not None:
        h = abs(problem.firstStep)
    else:
        h = _initial_step(
            fun, t, y, f, direction, problem.relTol, problem.absTol, span
        )

    errOld = 1e-4
    lastRejected = False

    while True:
        if nSteps + nRejected >= problem.maxSteps:
            return finish(
                Termination.TOLERANCE_FAILURE, msg=f"step limit {problem.maxSteps}"
            )

        hAbs = min(h, abs(tEnd - t))
        tNew = t + direction * hAbs
        if abs(tEnd - tNew) <= 1e-14 * max(1.0, abs(tEnd)):
            tNew = tEnd
        hStep = tNew - t

        yNew, fNew, err, K = _rk_step(fun, t, y, f, hStep)

        if problem.fixedStep is not None:
            errNorm = 0.0 if np.all(np.isfinite(yNew)) else np.inf
        elif np.all(np.isfinite(yNew)) and np.all(np.isfinite(fNew)):
            yScale = np.maximum(np.abs(y), np.abs(yNew))
            scale = problem.absTol + yScale * problem.relTol
            errNorm = _rms(err / scale)
        else:
            errNorm = np.inf

        if not errNorm <= 1.0:
            nRejected += 1
            lastRejected = True
            if problem.fixedStep is not None:
                return finish(Termination.TOLERANCE_FAILURE, msg="non-finite state")
            factor = _minFactor
            if np.isfinite(errNorm):
                factor = max(_minFactor, _safety * errNorm ** (-_expo))
            h = hAbs * factor
            if h < hMin:
                return _collapse(finish, t, y, f, watch, recentNorms, direction)
            continue

        # Accepted
        nSteps += 1
        Q = K.T @ _P
        segT0.append(t)
        segH.append(hStep)
        segY0.append(y.copy())
        segQ.append(Q)

        tOld = t
        t, y, f = tNew, yNew, fNew
        ts.append(t)
        ys.append(y.copy())

        stop = _locate_events(
            problem, gOld, tOld, t, y, (segT0, segH, segY0, segQ), events
        )
        if stop is not None:
            ts[-1] = stop.time
            ys[-1] = stop.state.copy()
            return finish(Termination.EVENT_STOP)

        watchedNorm = float(np.max(np.abs(y[watch])))
        recentNorms.append(watchedNorm)
        if watchedNorm > problem.blowupThreshold:
            tc = t + direction * _riccati_gap(y[watch], f[watch])
            logger.debug("blow-up at t=%r, extrapolated t_c=%r", t, tc)
            return finish(Termination.BLOWUP, tc)

        if t == tEnd:
            return finish(Termination.REACHED_END)

        if problem.fixedStep is not None:
            h = problem.fixedStep
            continue

        if errNorm == 0.0:
            factor = _maxFactor
        else:
            factor = _safety * errNorm ** (-_expo) * errOld**_beta
            factor = min(_maxFactor, max(_minFactor, factor))
        if lastRejected:
            factor = min(1.0, factor)
        errOld = max(errNorm, 1e-4)
        lastRejected = False
        h = hAbs * factor


# -----
# _riccati_gap
# -----
def _riccati_gap(y: Vector, f: Vector) -> float:
    fNorm = float(np.linalg.norm(f))
    if fNorm == 0.0 or not np.isfinite(fNorm):
        return 0.0
    return float(np.linalg.norm(y)) / fNorm


# ============================================
#                 _collapse
# ============================================
def _collapse(
    finish: Callable[..., IvpSolution],
    t: float,
    y: Vector,
    f: Vector,
    watch: NDArray[np.int_],
    recentNorms: deque[float],
    direction: float,
) -> IvpSolution:
    """
    Decides between blow-up and tolerance failure once the step size has
    collapsed: growing norms with `|f| ~ |y|^2` mean a Riccati-type
    singularity is close.
    """
    yNorm = float(np.linalg.norm(y[watch]))
    fNorm = float(np.linalg.norm(f[watch]))
    growing = len(recentNorms) >= 2 and recentNorms[-1] > 2.0 * recentNorms[0]
    quadratic = yNorm > 1.0 and fNorm >= 1e-3 * yNorm**2
    if growing and quadratic:
        tc = t + direction * _riccati_gap(y[watch], f[watch])
        return finish(Termination.BLOWUP, tc, "step size collapse")
    return finish(Termination.TOLERANCE_FAILURE, msg=f"step size collapse at t={t!r}")


# ============================================
#               _locate_events
# ============================================
def _locate_events(
    problem: IvpProblem,
    gOld: list[float],
    tOld: float,
    t: float,
    y: Vector,
    segments: tuple[list[float], list[float], list[Vector], list[NDArray[np.float64]]],
    events: list[EventRecord],
) -> EventRecord | None:
    """
    Finds event crossings inside the last accepted step, appends them in
    time order and returns the first terminal one.
    """
    if not problem.events:
        return None

    _segT0, segH, segY0, segQ = segments
    h = segH[-1]
    y0 = segY0[-1]
    Q = segQ[-1]

    def dense(tau: float) -> Vector:
        x = (tau - tOld) / h
        return y0 + h * (Q @ np.array([x, x * x, x**3, x**4]))

    found: list[EventRecord] = []
    for i, ev in enumerate(problem.events):
        gPrev = gOld[i]
        gNew = float(ev.function(t, y))
        gOld[i] = gNew
        up = gPrev < 0 <= gNew
        down = gPrev > 0 >= gNew
        if not (up or down):
            continue
        if (ev.direction > 0 and not up) or (ev.direction < 0 and not down):
            continue

        if gNew == 0.0:
            tRoot = t
        else:
            lo, hi = min(tOld, t), max(tOld, t)
            try:
                tRoot = brentq(
                    lambda tau: ev.function(tau, dense(tau)),
                    lo,
                    hi,
                    xtol=1e-15,
                    rtol=4 * np.finfo(float).eps,
                )
            except ValueError:
                tRoot = t if abs(gNew) <= abs(gPrev) else tOld
        yRoot = y.copy() if tRoot == t else dense(tRoot)
        residual = abs(float(ev.function(tRoot, yRoot)))
        found.append(EventRecord(float(tRoot), i, ev.name, yRoot, residual))

    found.sort(key=lambda rec: (rec.time - tOld) / h)
    for rec in found:
        events.append(rec)
        if problem.events[rec.index].terminal:
            return rec
    return None


# ============================================
#                HorizonPolicy
# ============================================
@dataclass(frozen=True)
class HorizonPolicy:
    """
    How far the direct integrations run.

    For c > 0 the horizon is `cycles` periods plus `cycleMargin` of a
    period. For c = 0 it is `max(minHorizon, decayMultiple / sigma)`
    with `sigma = max(|q0|, sqrt(k s0))`, extended by
    `extensionFactor` while a zero is still pending, up to `maxHorizon`.
    """

    cycles: int = cfg.oracleCycles
    cycleMargin: float = cfg.oracleCycleMargin
    minHorizon: float = cfg.zeroBgMinHorizon
    decayMultiple: float = cfg.zeroBgDecayMultiple
    extensionFactor: float = cfg.horizonExtensionFactor
    maxHorizon: float = cfg.maxHorizon

    # -----
    # periodic_horizon
    # -----
    def periodic_horizon(self, period: float) -> float:
        return (self.cycles + self.cycleMargin) * period

    # -----
    # zero_background_horizon
    # -----
    def zero_background_horizon(
        self, q0: float, s0: float, params: ModelParams
    ) -> float:
        sigma = max(abs(q0), np.sqrt(params.k * max(s0, 0.0)))
        if sigma == 0.0:
            return self.maxHorizon
        horizon = max(self.minHorizon, self.decayMultiple / sigma)
        return float(min(self.maxHorizon, horizon))


# ============================================
#            characteristic_rhs
# ============================================
def characteristic_rhs(params: ModelParams) -> RhsFunction:
    """
    Vector field of the characteristic system in (rho, p, q, s).
    """
    k, c, N = params.k, params.c, params.N

    def rhs(_t: float, y: Vector) -> Vector:
        rho, p, q, s = y
        return np.array(
            [
                -(N - 1) * rho * q - p * rho,
                -p * p - k * (N - 1) * s + k * (rho - c),
                k * s - q * q,
                -q * (c + N * s),
            ]
        )

    return rhs


# ============================================
#            solve_characteristic
# ============================================
def solve_characteristic(
    char: CharData,
    params: ModelParams,
    horizon: float,
    tol: Tolerances = Tolerances(),
) -> IvpSolution:
    """
    Integrates the characteristic system from the initial data over
    `[0, horizon]` with blow-up detection.

    Density and velocity gradient diverge together at a breakdown as
    long as the density is positive; a one-sided divergence is logged.
    """
    problem = IvpProblem(
        rhs=characteristic_rhs(params),
        t0=0.0,
        y0=np.array([char.rho0, char.p0, char.q0, char.s0]),
        tEnd=horizon,
        relTol=tol.rel,
        absTol=tol.abs,
    )
    sol = integrate(problem)

    if sol.termination == Termination.BLOWUP and char.hasDensity:
        rho, p, _q, _s = sol.yFinal
        if min(abs(rho), abs(p)) < 1e2:
            logger.warning(
                "one-sided divergence at t=%r: rho=%r, p=%r", sol.tFinal, rho, p
            )

    return sol


# ============================================
#                  eta_rhs
# ============================================
def eta_rhs(params: ModelParams, sTilde0: float) -> RhsFunction:
    """
    Vector field of the transformed system in (q, s_tilde, eta, w),
    with `Gamma = (s_tilde / s_tilde0)^(1/N)`.
    """
    k, c, N = params.k, params.c, params.N
    cOverN = params.cOverN

    def rhs(_t: float, y: Vector) -> Vector:
        q, sT, eta, w = y
        s = sT - cOverN
        gammaPow = (max(sT, 0.0) / sTilde0) ** ((N - 1) / N)
        return np.array(
            [
                k * sT - k * cOverN - q * q,
                -N * q * sT,
                w,
                -k * eta * (c + (N - 1) * s) + k * gammaPow,
            ]
        )

    return rhs


# ============================================
#                 solve_eta
# ============================================
def solve_eta(
    char: CharData,
    params: ModelParams,
    horizon: float,
    tol: Tolerances = Tolerances(),
    stopAtZero: bool = True,
) -> IvpSolution:
    """
    Integrates `(q, s_tilde, eta, w)` from the initial data.

    Events are `eta_zero` (descending, terminal unless `stopAtZero` is
    off) and `q_zero` (both directions). Breakdown of the original
    system is exactly `eta` reaching zero.

    Raises
    ------
    ZeroDensityError
        If the characteristic has no density.

    InvalidStateError
        If `s_tilde0 <= 0`.
    """
    if not char.hasDensity:
        raise exceptions.ZeroDensityError("solve_eta")
    if not char.sTilde0 > 0:
        raise exceptions.InvalidStateError("s_tilde0", char.sTilde0, "> 0")
    assert char.eta0 is not None and char.w0 is not None

    events = [
        EventSpec(lambda _t, y: y[2], "eta_zero", direction=-1, terminal=stopAtZero),
        EventSpec(lambda _t, y: y[0], "q_zero"),
    ]
    problem = IvpProblem(
        rhs=eta_rhs(params, char.sTilde0),
        t0=0.0,
        y0=np.array([char.q0, char.sTilde0, char.eta0, char.w0]),
        tEnd=horizon,
        relTol=tol.rel,
        absTol=tol.abs,
        events=events,
        blowupComponents=(0,),
    )
    return integrate(problem)
