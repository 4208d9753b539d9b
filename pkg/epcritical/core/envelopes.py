from dataclasses import dataclass
from functools import lru_cache
from itertools import pairwise
import logging

import numpy as np
from scipy.optimize import brentq

from epcritical.core.aquantity import a_of_gamma
from epcritical.core.aquantity import kappa
from epcritical.core.model import CharData
from epcritical.core.model import ModelParams
from epcritical.core.ode import EventSpec
from epcritical.core.ode import HorizonPolicy
from epcritical.core.ode import IvpProblem
from epcritical.core.ode import IvpSolution
from epcritical.core.ode import Tolerances
from epcritical.core.ode import Vector
from epcritical.core.ode import eta_rhs
from epcritical.core.ode import integrate
from epcritical.core.qs import OrbitGeometry
from epcritical.core.qs import QSState
from epcritical.core.qs import QSTrajectory
from epcritical.core.qs import integrate_qs
from epcritical.core.qs import orbit_geometry
from epcritical.core.qs import s_max_zero_bg
from epcritical.core.qs import trajectory_invariant
from epcritical.exceptions import exceptions
import epcritical.utilities.config as cfg

logger = logging.getLogger(__name__)

_eps = float(np.finfo(float).eps)


# ============================================
#               EnvelopeTrack
# ============================================
@dataclass(frozen=True)
class EnvelopeTrack:
    """
    One envelope: the solution of the second-order threshold equation
    pinned by `eta(tA) = eta'(tA) = 0`, carried forward from t = 0
    together with (q, s_tilde).
    """

    tA: float
    solution: IvpSolution

    @property
    def eta0(self) -> float:
        return float(self.solution.ys[0][2])

    @property
    def deta0(self) -> float:
        return float(self.solution.ys[0][3])

    # -----
    # eta
    # -----
    def eta(self, ts: Vector) -> Vector:
        return self.solution(np.asarray(ts, dtype=float))[:, 2]

    # -----
    # deta
    # -----
    def deta(self, ts: Vector) -> Vector:
        return self.solution(np.asarray(ts, dtype=float))[:, 3]


# ============================================
#               EnvelopePair
# ============================================
@dataclass(frozen=True)
class EnvelopePair:
    """
    The envelope functions of one (q0, s0, A0) line: two for c > 0, one
    or two for c = 0. `span` is the period (c > 0) or the computed
    horizon (c = 0).
    """

    kappa: float
    tracks: tuple[EnvelopeTrack, ...]
    qZeroTimes: tuple[float, ...]
    span: float
    period: float | None

    @property
    def tA1(self) -> float:
        return self.tracks[0].tA

    @property
    def tA2(self) -> float | None:
        return self.tracks[1].tA if len(self.tracks) > 1 else None

    @property
    def eta1At0(self) -> float:
        return self.tracks[0].eta0

    @property
    def eta2At0(self) -> float | None:
        return self.tracks[1].eta0 if len(self.tracks) > 1 else None

    @property
    def deta1At0(self) -> float:
        return self.tracks[0].deta0

    @property
    def deta2At0(self) -> float | None:
        return self.tracks[1].deta0 if len(self.tracks) > 1 else None

    # -----
    # to_record
    # -----
    def to_record(self) -> dict[str, float | None]:
        return {
            "eta1_0": self.eta1At0,
            "eta2_0": self.eta2At0,
            "deta1_0": self.deta1At0,
            "deta2_0": self.deta2At0,
        }


# ============================================
#              _level_crossings
# ============================================
def _level_crossings(traj: QSTrajectory, target: float, tEnd: float) -> list[float]:
    """
    Times in `[t0, tEnd]` where s_tilde equals `target`.

    s_tilde is monotone between consecutive zeros of q, so each such
    piece holds at most one crossing, bracketed by its endpoints.
    """
    sol = traj.solution
    breaks = [sol.t0, *[t for t in traj.qZeroTimes if sol.t0 < t < tEnd], tEnd]

    def f(t: float) -> float:
        return float(sol(t)[1] - target)

    found: list[float] = []
    for a, b in pairwise(breaks):
        fa, fb = f(a), f(b)
        if fa == 0.0:
            root = a
        elif fa * fb < 0:
            root = brentq(f, a, b, xtol=1e-15, rtol=4 * _eps)
        else:
            continue
        if not found or root - found[-1] > 1e-12 * max(1.0, abs(root)):
            found.append(float(root))
    return found


# ============================================
#              a_zero_times
# ============================================
def a_zero_times(
    char: CharData,
    geom: OrbitGeometry,
    params: ModelParams,
    tol: Tolerances = Tolerances(),
) -> tuple[float, ...]:
    """
    The two times in `[0, T)` where Gamma(t) = kappa (c > 0), found on
    the integrated q-s orbit. Empty when kappa is absent or outside the
    Gamma window.

    Raises
    ------
    ZeroDensityError
        If `rho0 == 0`.

    InternalConsistencyError
        If the crossing count, the crossing residual or the separation
        of A-zeros from q-zeros is off.
    """
    if not char.hasDensity or char.A0 is None:
        raise exceptions.ZeroDensityError("a_zero_times")
    times, _traj = _a_zero_crossings(char.q0, char.sTilde0, char.A0, geom, params, tol)
    return times


# -----
# _a_zero_crossings
# -----
def _a_zero_crossings(
    q0: float,
    sTilde0: float,
    A0: float,
    geom: OrbitGeometry,
    params: ModelParams,
    tol: Tolerances,
) -> tuple[tuple[float, ...], QSTrajectory | None]:
    kap = kappa(A0, params)
    if kap is None or geom.degenerate or not geom.gammaMin < kap < geom.gammaMax:
        return (), None

    N = params.N
    T = geom.period
    traj = integrate_qs(QSState(q0, sTilde0), T, params, tol)
    target = sTilde0 * kap**N
    times = [t for t in _level_crossings(traj, target, T) if t < T * (1.0 - 1e-8)]

    if len(times) != 2:
        raise exceptions.InternalConsistencyError(
            "two A-zeros per period", float(len(times)), 2.0
        )
    _check_crossings(traj, times, kap, sTilde0, N)

    return tuple(times), traj


# -----
# _check_crossings
# -----
def _check_crossings(
    traj: QSTrajectory, times: list[float], kap: float, sTilde0: float, N: int
) -> None:
    for tA in times:
        q, sTilde = traj.solution(tA)[:2]
        residual = abs((sTilde / sTilde0) ** (1.0 / N) - kap)
        if residual > 1e-9:
            raise exceptions.InternalConsistencyError(
                "Gamma(tA) = kappa", residual, 1e-9
            )
        if abs(q) <= 1e-12:
            raise exceptions.InternalConsistencyError(
                "A and q vanish together", abs(q), 1e-12
            )


# ============================================
#               _pinned_track
# ============================================
def _pinned_track(
    q0: float,
    sTilde0: float,
    tA: float,
    stateAtTA: Vector,
    horizon: float,
    params: ModelParams,
    tol: Tolerances,
) -> EnvelopeTrack:
    """
    Integrates the envelope pinned at `tA` back to t = 0, then forward
    from the exact initial (q, s_tilde) across `[0, horizon]`.
    """
    rhs = eta_rhs(params, sTilde0)

    if tA > 0:
        back = integrate(
            IvpProblem(
                rhs=rhs,
                t0=tA,
                y0=np.array([stateAtTA[0], stateAtTA[1], 0.0, 0.0]),
                tEnd=0.0,
                relTol=tol.rel,
                absTol=tol.abs,
                blowupThreshold=np.inf,
            )
        )
        if not back.success:
            raise exceptions.IntegrationError(
                "an envelope (backward)", back.termination.value, back.tFinal
            )
        eta0, deta0 = float(back.yFinal[2]), float(back.yFinal[3])
    else:
        eta0, deta0 = 0.0, 0.0

    forward = integrate(
        IvpProblem(
            rhs=rhs,
            t0=0.0,
            y0=np.array([q0, sTilde0, eta0, deta0]),
            tEnd=horizon,
            relTol=tol.rel,
            absTol=tol.abs,
            events=[EventSpec(lambda _t, y: y[0], "q_zero")],
            blowupThreshold=np.inf,
        )
    )
    if not forward.success:
        raise exceptions.IntegrationError(
            "an envelope (forward)", forward.termination.value, forward.tFinal
        )

    return EnvelopeTrack(tA, forward)


# ============================================
#            _validate_envelopes
# ============================================
def _validate_envelopes(
    pair: EnvelopePair, A0: float, sTilde0: float, params: ModelParams
) -> None:
    """
    Self-checks: at every q-zero the envelopes equal `-A/(k s)`, and each
    envelope stays nonnegative over the span.
    """
    k, N = params.k, params.N
    for track in pair.tracks:
        for tq in pair.qZeroTimes:
            _q, sTilde, eta, _w = track.solution(tq)
            s = sTilde - params.cOverN
            gamma = (sTilde / sTilde0) ** (1.0 / N)
            expected = -a_of_gamma(gamma, A0, params) / (k * s)
            residual = abs(eta - expected) / max(1.0, abs(expected))
            if residual > cfg.envelopeCheckTol:
                raise exceptions.InternalConsistencyError(
                    "envelope equals -A/(ks) at q-zeros", residual, cfg.envelopeCheckTol
                )

        ts = np.linspace(0.0, pair.span, 1001)
        etas = track.eta(ts)
        floor = -cfg.envelopeCheckTol * max(1.0, float(np.max(etas)))
        if float(np.min(etas)) < floor:
            raise exceptions.InternalConsistencyError(
                "envelope positivity", float(-np.min(etas)), -floor
            )


# ============================================
#              build_envelopes
# ============================================
def build_envelopes(
    char: CharData, params: ModelParams, tol: Tolerances = Tolerances()
) -> EnvelopePair:
    """
    Envelopes of a characteristic with positive background.

    Depends only on `(q0, s0, A0)`; results are cached so that every
    point of one A-line shares them.

    Raises
    ------
    InvalidParametersError
        If c = 0.

    EnvelopeNotFoundError
        If kappa is not strictly inside the Gamma window.
    """
    if not params.hasBackground:
        raise exceptions.InvalidParametersError("c", params.c, "c > 0")
    if not char.hasDensity or char.A0 is None:
        raise exceptions.ZeroDensityError("build_envelopes")
    return _positive_background_envelopes(char.q0, char.s0, char.A0, params, tol)


@lru_cache(maxsize=512)
def _positive_background_envelopes(
    q0: float, s0: float, A0: float, params: ModelParams, tol: Tolerances
) -> EnvelopePair:
    sTilde0 = s0 + params.cOverN
    geom = orbit_geometry(q0, sTilde0, params)
    times, traj = _a_zero_crossings(q0, sTilde0, A0, geom, params, tol)
    if not times or traj is None:
        raise exceptions.EnvelopeNotFoundError(
            "kappa is not strictly inside the Gamma window of the orbit."
        )

    T = geom.period
    horizon = 2.0 * T
    tracks = tuple(
        _pinned_track(q0, sTilde0, tA, traj.solution(tA)[:2], horizon, params, tol)
        for tA in times
    )
    qZeros = tuple(
        ev.time for ev in tracks[0].solution.events_named("q_zero") if ev.time <= T
    )
    kap = kappa(A0, params)
    assert kap is not None
    pair = EnvelopePair(kap, tracks, qZeros, T, T)
    _validate_envelopes(pair, A0, sTilde0, params)

    logger.debug(
        "envelopes q0=%r s0=%r A0=%r: tA=%r eta(0)=%r",
        q0,
        s0,
        A0,
        times,
        [tr.eta0 for tr in tracks],
    )
    return pair


# ============================================
#          build_envelopes_zero_bg
# ============================================
def build_envelopes_zero_bg(
    char: CharData,
    params: ModelParams,
    tol: Tolerances = Tolerances(),
    policy: HorizonPolicy = HorizonPolicy(),
) -> EnvelopePair:
    """
    Envelopes for zero background.

    A changes sign once (one envelope) unless q0 < 0 and A0 >= 0, where
    Gamma rises to the orbit apex and falls back through kappa (two
    envelopes). The search horizon is extended until every A-zero is
    found.

    Raises
    ------
    EnvelopeNotFoundError
        If the case admits no envelope or an A-zero lies beyond the
        maximal horizon.
    """
    if params.hasBackground:
        raise exceptions.InvalidParametersError("c", params.c, "c = 0")
    if not char.hasDensity or char.A0 is None:
        raise exceptions.ZeroDensityError("build_envelopes_zero_bg")
    if not char.s0 > 0:
        raise exceptions.InvalidStateError("s0", char.s0, "s0 > 0 when c = 0")
    return _zero_background_envelopes(
        char.q0, char.s0, char.A0, params, tol, policy
    )


@lru_cache(maxsize=512)
def _zero_background_envelopes(
    q0: float,
    s0: float,
    A0: float,
    params: ModelParams,
    tol: Tolerances,
    policy: HorizonPolicy,
) -> EnvelopePair:
    N = params.N
    kap = kappa(A0, params)
    if kap is None:
        raise exceptions.EnvelopeNotFoundError("A is negative for all times.")

    R = trajectory_invariant(QSState(q0, s0), params)
    gammaApex = (s_max_zero_bg(R, params) / s0) ** (1.0 / N)

    if A0 >= 0 and q0 >= 0:
        raise exceptions.EnvelopeNotFoundError("A never changes sign when q0 >= 0.")
    if A0 >= 0 and kap >= gammaApex:
        raise exceptions.EnvelopeNotFoundError("kappa is beyond the orbit apex.")

    expected = 2 if A0 >= 0 else 1
    target = s0 * kap**N
    horizon = policy.zero_background_horizon(q0, s0, params)

    while True:
        traj = integrate_qs(QSState(q0, s0), horizon, params, tol)
        times = _level_crossings(traj, target, horizon)
        if len(times) >= expected:
            break
        if horizon >= policy.maxHorizon:
            raise exceptions.EnvelopeNotFoundError(
                f"A-zero not reached before t = {horizon!r}."
            )
        horizon = min(policy.maxHorizon, horizon * policy.extensionFactor)
        logger.debug("extending A-zero search to t=%r", horizon)

    times = times[:expected]
    for tA in times:
        residual = abs(float(traj.solution(tA)[1]) - target)
        if residual > 1e-9:
            raise exceptions.InternalConsistencyError(
                "s(tA) = s0 kappa^N", residual, 1e-9
            )

    span = max(horizon, 2.0 * times[-1])
    tracks = tuple(
        _pinned_track(q0, s0, tA, traj.solution(tA)[:2], span, params, tol)
        for tA in times
    )

    # eta'' at the pinning time is k Gamma^(N-1) = k kappa^(N-1)
    for track in tracks:
        rhs = eta_rhs(params, s0)
        curvature = float(rhs(track.tA, track.solution(track.tA))[3])
        if not curvature > 0:
            raise exceptions.InternalConsistencyError(
                "envelope minimum at tA", curvature, 0.0
            )

    qZeros = tuple(ev.time for ev in tracks[0].solution.events_named("q_zero"))
    pair = EnvelopePair(kap, tracks, qZeros, span, None)
    _validate_envelopes(pair, A0, s0, params)

    return pair


# ============================================
#        positive_particular_solution
# ============================================
def positive_particular_solution(
    trajectory: QSTrajectory, ts: Vector
) -> tuple[Vector, float]:
    """
    The strictly positive solution `g = s~^(-1/N) / (N s~0^(1-1/N))` of
    the threshold equation along a q-s trajectory, and the value of A
    it carries, `(q0^2 - k s0) / (N s~0)`.

    Any characteristic with that A0 and `eta0 = g(0)` stays smooth.
    """
    params = trajectory.params
    N, k = params.N, params.k
    sTilde0 = trajectory.state0.sTilde
    q0 = trajectory.state0.q
    s0 = sTilde0 - params.cOverN

    _q, sTilde = trajectory.states(ts)
    g = sTilde ** (-1.0 / N) / (N * sTilde0 ** (1.0 - 1.0 / N))
    aValue = (q0 * q0 - k * s0) / (N * sTilde0)
    return g, float(aValue)
