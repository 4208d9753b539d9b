from dataclasses import dataclass
import logging
from typing import Any
from typing import Callable

import numpy as np

from epcritical.core.aquantity import a_of_gamma
from epcritical.core.aquantity import a_window
from epcritical.core.aquantity import kappa
from epcritical.core.envelopes import EnvelopePair
from epcritical.core.envelopes import a_zero_times
from epcritical.core.envelopes import build_envelopes
from epcritical.core.envelopes import build_envelopes_zero_bg
from epcritical.core.envelopes import positive_particular_solution
from epcritical.core.model import CharData
from epcritical.core.model import ModelParams
from epcritical.core.model import Verdict
from epcritical.core.ode import HorizonPolicy
from epcritical.core.ode import IvpProblem
from epcritical.core.ode import Termination
from epcritical.core.ode import Tolerances
from epcritical.core.ode import Vector
from epcritical.core.ode import integrate
from epcritical.core.ode import solve_characteristic
from epcritical.core.ode import solve_eta
from epcritical.core.qs import OrbitGeometry
from epcritical.core.qs import QSState
from epcritical.core.qs import QSTrajectory
from epcritical.core.qs import decay_exponents
from epcritical.core.qs import integrate_qs
from epcritical.core.qs import orbit_geometry
from epcritical.core.qs import s_extrema
from epcritical.core.threshold import MarginPolicy
from epcritical.core.threshold import classify
from epcritical.exceptions import exceptions
from epcritical.verify.concentration import one_dim_concentration_check
from epcritical.verify.concentration import one_dim_concentration_oracle
from epcritical.verify.oracle import OracleKind
from epcritical.verify.oracle import oracle_outcome
import epcritical.utilities.config as cfg

logger = logging.getLogger(__name__)

# Dense samples per orbit used by the trajectory checks
_samples = 600

# Periods integrated per random orbit (c > 0)
_cycles = 3

# Span of the random c = 0 orbits
_zeroBgSpan = 200.0


# ============================================
#                CheckResult
# ============================================
@dataclass(frozen=True)
class CheckResult:
    """
    One line of the invariant ledger. `worst` is the largest violation
    observed across `instances` randomized cases.
    """

    name: str
    passed: bool
    worst: float
    threshold: float
    instances: int
    detail: str = ""

    # -----
    # to_record
    # -----
    def to_record(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "worst": self.worst,
            "threshold": self.threshold,
            "instances": self.instances,
            "detail": self.detail,
        }


# -----
# _result
# -----
def _result(
    name: str, worst: float, threshold: float, instances: int, detail: str = ""
) -> CheckResult:
    worst = float(worst)
    return CheckResult(name, worst <= threshold, worst, threshold, instances, detail)


# ============================================
#              InvariantLedger
# ============================================
@dataclass(frozen=True)
class InvariantLedger:
    params: ModelParams
    seed: int
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> list[CheckResult]:
        return [check for check in self.checks if not check.passed]

    # -----
    # to_record
    # -----
    def to_record(self) -> dict[str, Any]:
        return {
            "params": {"k": self.params.k, "c": self.params.c, "N": self.params.N},
            "seed": self.seed,
            "passed": self.passed,
            "checks": [check.to_record() for check in self.checks],
        }


# ============================================
#          zero_density_sign_check
# ============================================
def zero_density_sign_check(
    char: CharData, params: ModelParams, horizon: float, tol: Tolerances = Tolerances()
) -> bool:
    """
    True when `q p - k s` keeps the sign it starts with along a
    zero-density characteristic. The quantity obeys
    `D' = -(p + q) D`, so it can never cross zero.

    Raises
    ------
    InvalidStateError
        If the characteristic carries density.
    """
    if char.hasDensity:
        raise exceptions.InvalidStateError("rho0", char.rho0, "rho0 = 0")
    sol = solve_characteristic(char, params, horizon, tol)
    _ts, ys = sol.sample(_samples)
    product = ys[:, 2] * ys[:, 1] - params.k * ys[:, 3]
    start = product[0]
    if start == 0:
        return bool(np.all(np.abs(product) <= tol.abs))
    return bool(np.all(np.sign(product) == np.sign(start)))


# ============================================
#              invariant_suite
# ============================================
def invariant_suite(
    params: ModelParams,
    seed: int = cfg.defaultSeed,
    count: int = cfg.defaultSuiteCount,
    tol: Tolerances = Tolerances(),
) -> InvariantLedger:
    """
    Runs every structural property of the model over randomized
    instances and collects a pass/fail ledger.

    Each check draws from its own generator spawned from `seed`, so the
    ledger is reproducible and one check never shifts another's samples.
    A check that raises a library error is recorded as failed.

    Parameters
    ----------
    params : ModelParams
        Model parameters. The set of checks depends on whether c > 0.

    seed : int
        Root seed.

    count : int
        Random instances per check.

    tol : Tolerances
        Integrator tolerances.

    Raises
    ------
    InvalidSweepError
        If `count < 1`.
    """
    if count < 1:
        raise exceptions.InvalidSweepError(f"instance count must be >= 1, got {count}")

    checks = _positive_bg_checks if params.hasBackground else _zero_bg_checks
    children = np.random.SeedSequence(seed).spawn(len(checks))
    rngs = [np.random.default_rng(child) for child in children]

    results: list[CheckResult] = []
    for (name, check), rng in zip(checks, rngs):
        logger.info("running check %s", name)
        try:
            results.extend(check(rng, params, count, tol))
        except (
            exceptions.IntegrationError,
            exceptions.InternalConsistencyError,
            exceptions.EnvelopeNotFoundError,
            exceptions.QuadratureError,
            exceptions.InvalidStateError,
            exceptions.InvalidInvariantError,
        ) as err:
            logger.warning("check %s raised: %s", name, err)
            results.append(CheckResult(name, False, np.inf, 0.0, 0, str(err)))

    return InvariantLedger(params, seed, tuple(results))


# -----
# _random_state
# -----
def _random_state(rng: np.random.Generator, params: ModelParams) -> QSState:
    q0 = float(rng.uniform(-1.0, 1.0))
    if params.hasBackground:
        return QSState(q0, float(params.cOverN * rng.uniform(0.3, 3.0)))
    return QSState(q0, float(rng.uniform(0.2, 2.0)))


# -----
# _random_orbits
# -----
def _random_orbits(
    rng: np.random.Generator, params: ModelParams, count: int, tol: Tolerances
) -> list[tuple[OrbitGeometry | None, QSTrajectory]]:
    orbits: list[tuple[OrbitGeometry | None, QSTrajectory]] = []
    for _ in range(count):
        state = _random_state(rng, params)
        if params.hasBackground:
            geom = orbit_geometry(state.q, state.sTilde, params)
            traj = integrate_qs(state, _cycles * geom.period, params, tol)
            orbits.append((geom, traj))
        else:
            orbits.append((None, integrate_qs(state, _zeroBgSpan, params, tol)))
    return orbits


# ============================================
#              Trajectory checks
# ============================================
def _check_trajectories(
    rng: np.random.Generator, params: ModelParams, count: int, tol: Tolerances
) -> list[CheckResult]:
    """
    Conservation of the invariant, the Gamma identity, positivity of
    s_tilde and the sign rule for s_tilde' along random orbits. With
    c > 0 also periodicity, zero mean of q and the period quadrature
    against the q-zero event spacing.
    """
    drift = gammaErr = 0.0
    minS = np.inf
    orientation = 0
    periodErr = meanQ = periodicErr = 0.0

    for geom, traj in _random_orbits(rng, params, count, tol):
        ts = np.linspace(traj.solution.t0, traj.solution.tFinal, _samples)
        q, sTilde = traj.states(ts)
        drift = max(drift, float(np.max(np.abs(traj.invariant_drift(ts)))))
        identity = np.exp(-traj.integral_of_q(ts)) - traj.gamma(ts)
        gammaErr = max(gammaErr, float(np.max(np.abs(identity))))
        minS = min(minS, float(np.min(sTilde)))
        orientation += traj.orientation_violations(ts)

        if geom is None or geom.degenerate:
            continue
        T = geom.period
        qScale = float(np.max(np.abs(q)))
        meanOverPeriod = float(traj.integral_of_q(np.array([T]))[0])
        meanQ = max(meanQ, abs(meanOverPeriod) / (T * qScale))

        probes = np.linspace(0.0, (_cycles - 1) * T, 50)
        now, later = traj.solution(probes), traj.solution(probes + T)
        scale = max(qScale, float(np.max(sTilde)))
        periodicErr = max(
            periodicErr, float(np.max(np.abs(later[:, :2] - now[:, :2]))) / scale
        )

        zeros = traj.qZeroTimes
        if len(zeros) >= 3:
            spacing = np.array(zeros[2:]) - np.array(zeros[:-2])
            periodErr = max(periodErr, float(np.max(np.abs(spacing - T))) / T)

    results = [
        _result("invariant_drift", drift, 100 * tol.rel, count),
        _result("gamma_identity", gammaErr, 1e-7, count),
        _result("s_tilde_positive", -minS, 0.0, count, f"min s_tilde {minS!r}"),
        _result("clockwise_rotation", orientation, 0, count),
    ]
    if params.hasBackground:
        results += [
            _result("mean_q_zero", meanQ, 1e-7, count),
            _result("orbit_periodicity", periodicErr, 1e-6, count),
            _result("period_vs_events", periodErr, 1e-7, count),
        ]
    return results


# ============================================
#             Orbit extrema checks
# ============================================
def _check_extrema(
    rng: np.random.Generator, params: ModelParams, count: int, _tol: Tolerances
) -> list[CheckResult]:
    """
    The orbit extrema straddle the equilibrium with the upper excursion
    larger than the lower one. For N = 4 they also match the closed
    form `sqrt(s~) = (R +- sqrt(R^2 - k^2 c)) / 2k`.
    """
    k, c, N = params.k, params.c, params.N
    cOverN = params.cOverN
    n = 5 * count
    asymmetric = 0
    closedErr = 0.0

    for _ in range(n):
        state = _random_state(rng, params)
        geom = orbit_geometry(state.q, state.sTilde, params)
        if geom.degenerate:
            continue
        if not 0 < cOverN - geom.sTildeMin < geom.sTildeMax - cOverN:
            asymmetric += 1
        if N == 4:
            R = geom.R
            root = np.sqrt(R * R - k * k * c)
            lo, hi = ((R - root) / (2 * k)) ** 2, ((R + root) / (2 * k)) ** 2
            closedErr = max(
                closedErr,
                abs(geom.sTildeMin - lo) / lo,
                abs(geom.sTildeMax - hi) / hi,
            )

    results = [_result("orbit_asymmetry", asymmetric, 0, n)]
    if N == 4:
        extra = max(closedErr, _random_invariant_extrema(rng, params, n))
        results.append(_result("extrema_closed_form", extra, 1e-10, 2 * n))
    return results


# -----
# _random_invariant_extrema
# -----
def _random_invariant_extrema(
    rng: np.random.Generator, params: ModelParams, n: int
) -> float:
    k, c = params.k, params.c
    worst = 0.0
    for _ in range(n):
        R = k * np.sqrt(c) * (1.0 + rng.uniform(0.01, 3.0))
        root = np.sqrt(R * R - k * k * c)
        lo, hi = ((R - root) / (2 * k)) ** 2, ((R + root) / (2 * k)) ** 2
        sMin, sMax = s_extrema(float(R), params)
        worst = max(worst, abs(sMin - lo) / lo, abs(sMax - hi) / hi)
    return worst


# ============================================
#             A-quantity checks
# ============================================
def _check_a_quantity(
    rng: np.random.Generator, params: ModelParams, count: int, tol: Tolerances
) -> list[CheckResult]:
    """
    Integrates `A' = -q A + k q Gamma^(N-1)` next to the q-s system and
    compares with the closed form; checks that kappa is a root.
    """
    k, N = params.k, params.N
    closedErr = rootErr = 0.0

    for _ in range(count):
        state = _random_state(rng, params)
        A0 = float(rng.uniform(-0.5, 0.5) * k)
        if params.hasBackground:
            span = _cycles * orbit_geometry(state.q, state.sTilde, params).period
        else:
            span = _zeroBgSpan
        sol = integrate(
            IvpProblem(
                rhs=_a_rhs(params, state.sTilde),
                t0=0.0,
                y0=np.array([state.q, state.sTilde, A0]),
                tEnd=span,
                relTol=tol.rel,
                absTol=tol.abs,
            )
        )
        if sol.termination != Termination.REACHED_END:
            raise exceptions.IntegrationError(
                "the A equation", sol.termination.value, sol.tFinal
            )
        _ts, ys = sol.sample(_samples)
        gamma = (ys[:, 1] / state.sTilde) ** (1.0 / N)
        closed = a_of_gamma(gamma, A0, params)
        scale = np.maximum(1.0, np.abs(closed))
        closedErr = max(closedErr, float(np.max(np.abs(ys[:, 2] - closed) / scale)))

        floor = -k / (N - 2) if N > 2 else -2.0 * k
        A0 = float(rng.uniform(0.9 * floor, 2.0 * k))
        kap = kappa(A0, params)
        if kap is not None:
            residual = abs(float(a_of_gamma(kap, A0, params)))
            rootErr = max(rootErr, residual / max(1.0, abs(A0)))

    return [
        _result("closed_form_a", closedErr, 1e-7, count),
        _result("kappa_root", rootErr, 1e-12, count),
    ]


# -----
# _a_rhs
# -----
def _a_rhs(params: ModelParams, sTilde0: float) -> Callable[[float, Vector], Vector]:
    k, N = params.k, params.N
    kcOverN = k * params.cOverN

    def rhs(_t: float, y: Vector) -> Vector:
        q, sT, A = y
        gammaPow = (max(sT, 0.0) / sTilde0) ** ((N - 1) / N)
        return np.array(
            [k * sT - kcOverN - q * q, -N * q * sT, -q * A + k * q * gammaPow]
        )

    return rhs


# ============================================
#               A-zero checks
# ============================================
def _check_a_zeros(
    rng: np.random.Generator, params: ModelParams, count: int, tol: Tolerances
) -> list[CheckResult]:
    """
    A0 drawn inside the Gamma window gives exactly two A-zeros per
    period, each at a point where Gamma equals kappa and q does not
    vanish.
    """
    N = params.N
    failures = 0
    residual = 0.0
    closest = np.inf
    n = max(1, count // 2)

    for _ in range(n):
        state = _random_state(rng, params)
        s0 = state.sTilde - params.cOverN
        geom = orbit_geometry(state.q, state.sTilde, params)
        if geom.degenerate:
            continue
        lo, hi = a_window(state.q, s0, params)
        A0 = float(lo + rng.uniform(0.1, 0.9) * (hi - lo))
        char = CharData.from_a0(state.q, s0, A0, params, eta0=1.0)
        try:
            times = a_zero_times(char, geom, params, tol)
        except exceptions.InternalConsistencyError as err:
            logger.warning("A-zeros of (%r, %r, %r): %s", state.q, s0, A0, err)
            failures += 1
            continue
        if len(times) != 2:
            failures += 1
            continue

        kap = kappa(A0, params)
        assert kap is not None
        traj = integrate_qs(state, geom.period, params, tol)
        qValues, _s = traj.states(np.linspace(0.0, geom.period, 200))
        qScale = float(np.max(np.abs(qValues)))
        for tA in times:
            q, sTilde = traj.solution(tA)[:2]
            gamma = (sTilde / state.sTilde) ** (1.0 / N)
            residual = max(residual, abs(gamma - kap))
            closest = min(closest, abs(q) / qScale)

    return [
        _result("a_zero_count", failures, 0, n),
        _result("a_zero_gamma", residual, 1e-8, 2 * n),
        _result(
            "a_zero_q_separation", -closest, -1e-10, 2 * n, f"min |q| {closest!r}"
        ),
    ]


# ============================================
#              Envelope checks
# ============================================
def _reference_line(params: ModelParams) -> CharData:
    """
    The envelope test line `q0 = 0.1, s0 = -0.1, A0 = 0.15`, moved into
    the admissible region when the parameters require it.
    """
    cOverN = params.cOverN
    q0 = 0.1
    s0 = -0.1 if -0.1 > -0.9 * cOverN else -0.4 * cOverN
    lo, hi = a_window(q0, s0, params)
    A0 = 0.15 if lo < 0.15 < hi else 0.5 * (lo + hi)
    return CharData.from_a0(q0, s0, A0, params, eta0=1.0)


def _check_envelopes(
    _rng: np.random.Generator, params: ModelParams, _count: int, tol: Tolerances
) -> list[CheckResult]:
    """
    Structure of the two envelopes on the reference line: positive away
    from their pinning times, equal to `-A/(ks)` at every q-zero,
    periodic, distinct, and ordered with a sign change of the difference
    at every q-zero and nowhere else. Solutions on the line are affine
    combinations of the two, which is checked directly.
    """
    char = _reference_line(params)
    assert char.A0 is not None
    pair = build_envelopes(char, params, tol)
    T = pair.span
    k, N = params.k, params.N
    ts = np.linspace(0.0, T, 4001)

    positivity = 0.0
    for track in pair.tracks:
        eta = track.eta(ts)
        away = np.abs(ts - track.tA) > 1e-3 * T
        away &= np.abs(ts - track.tA - T) > 1e-3 * T
        positivity = max(positivity, float(-np.min(eta[away])))

    identity = 0.0
    for tq in pair.qZeroTimes:
        for track in pair.tracks:
            _q, sTilde, eta, _w = track.solution(tq)
            gamma = (sTilde / char.sTilde0) ** (1.0 / N)
            s = sTilde - params.cOverN
            expected = -a_of_gamma(gamma, char.A0, params) / (k * s)
            identity = max(identity, abs(eta - expected) / max(1.0, abs(expected)))

    periodic = 0.0
    for track in pair.tracks:
        shift = np.abs(track.eta(ts + T) - track.eta(ts))
        periodic = max(periodic, float(np.max(shift)) / float(np.max(track.eta(ts))))

    distinct = abs(pair.eta1At0 - pair.eta2At0) if pair.eta2At0 is not None else 0.0

    crossings = _crossing_mismatches(pair, ts)
    containment = _containment_drift(char, pair, params, tol)

    return [
        _result("envelope_positivity", positivity, 0.0, 2),
        _result("envelope_qzero_identity", identity, 1e-7, 2 * len(pair.qZeroTimes)),
        _result("envelope_periodicity", periodic, 1e-6, 2),
        _result("envelope_distinct", -distinct, -1e-8, 1, f"gap {distinct!r}"),
        _result("envelope_crossings", crossings, 0, len(pair.qZeroTimes)),
        _result("envelope_containment", containment, 1e-6, 1),
    ]


# -----
# _crossing_mismatches
# -----
def _crossing_mismatches(pair: EnvelopePair, ts: Vector) -> int:
    """
    Counts sign changes of `eta1 - eta2` not next to a q-zero, plus
    interior q-zeros without a sign change.
    """
    track1, track2 = pair.tracks
    gap = track1.eta(ts) - track2.eta(ts)
    dt = ts[1] - ts[0]
    flips = ts[1:][np.sign(gap[1:]) * np.sign(gap[:-1]) < 0]
    interior = [tq for tq in pair.qZeroTimes if 2 * dt < tq < ts[-1] - 2 * dt]
    stray = sum(
        1
        for t in flips
        if min((abs(t - tq) for tq in interior), default=np.inf) > 2 * dt
    )
    missed = sum(1 for tq in interior if not np.any(np.abs(flips - tq) <= 2 * dt))
    return stray + missed


# -----
# _containment_drift
# -----
def _containment_drift(
    char: CharData, pair: EnvelopePair, params: ModelParams, tol: Tolerances
) -> float:
    """
    Integrates the midpoint of the line and measures how far its
    position `lambda = (eta - eta1) / (eta2 - eta1)` between the
    envelopes moves away from 1/2, skipping the q-zeros where the
    envelopes meet.
    """
    assert char.A0 is not None and pair.eta2At0 is not None
    mid = 0.5 * (pair.eta1At0 + pair.eta2At0)
    probe = CharData.from_a0(char.q0, char.s0, char.A0, params, eta0=mid)
    T = pair.span
    sol = solve_eta(probe, params, T, tol, stopAtZero=False)
    ts = np.linspace(0.0, T, 2001)
    keep = np.ones_like(ts, dtype=bool)
    for tq in pair.qZeroTimes:
        keep &= np.abs(ts - tq) > 1e-2 * T
    track1, track2 = pair.tracks
    eta1, eta2 = track1.eta(ts[keep]), track2.eta(ts[keep])
    lam = (sol(ts[keep])[:, 2] - eta1) / (eta2 - eta1)
    return float(np.max(np.abs(lam - 0.5)))


# ============================================
#          Zero-background envelopes
# ============================================
def _check_zero_bg_envelopes(
    rng: np.random.Generator, params: ModelParams, count: int, tol: Tolerances
) -> list[CheckResult]:
    """
    For q0 > 0 and A0 < 0 the single envelope touches zero with zero
    slope at tA and is positive elsewhere.
    """
    k, N = params.k, params.N
    floor = -k / (N - 2) if N > 2 else -k
    pinning = positivity = 0.0
    n = max(1, count // 4)
    for _ in range(n):
        q0, s0 = float(rng.uniform(0.2, 2.0)), float(rng.uniform(0.2, 2.0))
        A0 = float(rng.uniform(0.9 * floor, 0.1 * floor))
        char = CharData.from_a0(q0, s0, A0, params, eta0=1.0)
        pair = build_envelopes_zero_bg(char, params, tol, HorizonPolicy())
        track = pair.tracks[0]
        _q, _s, eta, deta = track.solution(track.tA)
        scale = max(1.0, pair.eta1At0)
        pinning = max(pinning, abs(eta) / scale, abs(deta) / scale)
        ts = np.linspace(0.0, pair.span, 4001)
        away = np.abs(ts - track.tA) > 1e-3 * pair.span
        positivity = max(positivity, float(-np.min(track.eta(ts)[away])))

    return [
        _result("envelope_pinning", pinning, 1e-8, n),
        _result("envelope_positivity", positivity, 0.0, n),
    ]


# ============================================
#            Breakdown structure
# ============================================
def _check_breakdown(
    rng: np.random.Generator, params: ModelParams, count: int, tol: Tolerances
) -> list[CheckResult]:
    """
    Zero-density characteristics: the sign rule for `q p - k s` and, for
    c > 0, breakdown before the Riccati comparison time
    `pi / sqrt(k ((N-1) s~_min + c/N))`. Positive density: `w` stays
    bounded through breakdown on the reference line (c > 0) and the
    `A0 = -k/(N-2)` line always breaks down (c = 0, N >= 3).
    """
    k, N = params.k, params.N
    policy = HorizonPolicy()
    signFailures = 0
    lateBlowups = 0
    n = max(1, count // 2)

    for _ in range(n):
        state = _random_state(rng, params)
        s0 = state.sTilde - params.cOverN
        p0 = float(rng.uniform(-3.0, 3.0))
        char = CharData.build(1.0, state.q, s0, p0, 0.0, params)
        if params.hasBackground:
            geom = orbit_geometry(state.q, state.sTilde, params)
            # the orbit's own s~_min gives a tighter bound than pi / sqrt(k c)
            rate = k * ((N - 1) * geom.sTildeMin + params.cOverN)
            bound = np.pi / np.sqrt(rate)
            horizon = 2.0 * bound
        else:
            horizon = policy.zero_background_horizon(state.q, s0, params)
            bound = np.inf
        if not zero_density_sign_check(char, params, horizon, tol):
            signFailures += 1
        if params.hasBackground:
            sol = solve_characteristic(char, params, horizon, tol)
            tc = sol.tcEstimate if sol.termination == Termination.BLOWUP else None
            if tc is None or tc > bound * (1.0 + 1e-6):
                lateBlowups += 1

    results = [_result("zero_density_sign", signFailures, 0, n)]

    if params.hasBackground:
        results.append(_result("zero_density_riccati_bound", lateBlowups, 0, n))
        char = _reference_line(params)
        assert char.A0 is not None
        pair = build_envelopes(char, params, tol)
        assert pair.eta2At0 is not None
        eta0 = 1.5 * max(pair.eta1At0, pair.eta2At0)
        above = CharData.from_a0(char.q0, char.s0, char.A0, params, eta0=eta0)
        outcome = oracle_outcome(above, params, policy, tol)
        bounded = outcome.kind == OracleKind.BLOWUP and outcome.wBounded
        results.append(
            _result(
                "w_bounded_at_breakdown", 0 if bounded else 1, 0, 1, outcome.kind.value
            )
        )
    elif N > 2:
        failures = 0
        marginPolicy = MarginPolicy(estimateBreakdownTime=False)
        for _ in range(n):
            q0, s0 = float(rng.uniform(-1.0, 1.0)), float(rng.uniform(0.2, 2.0))
            eta0 = float(rng.uniform(0.1, 5.0))
            if q0 == 0:
                continue
            char = CharData.from_a0(q0, s0, -k / (N - 2), params, eta0=eta0)
            if classify(char, params, marginPolicy).verdict != Verdict.BREAKDOWN:
                failures += 1
        results.append(_result("riccati_threshold_line", failures, 0, n))

    return results


# ============================================
#         Particular solution and density
# ============================================
def _check_particular_solution(
    rng: np.random.Generator, params: ModelParams, count: int, tol: Tolerances
) -> list[CheckResult]:
    """
    The positive particular solution solves the threshold equation on
    its own A-line: integrating eta from `g(0)` reproduces `g`. For
    c > 0 the density of a subcritical point is periodic.
    """
    worst = 0.0
    n = max(1, count // 4)
    for _ in range(n):
        state = _random_state(rng, params)
        if state.q == 0:
            continue
        if params.hasBackground:
            span = 2.0 * orbit_geometry(state.q, state.sTilde, params).period
        else:
            span = 50.0
        traj = integrate_qs(state, span, params, tol)
        ts = np.linspace(0.0, span, _samples)
        g, aValue = positive_particular_solution(traj, ts)
        s0 = state.sTilde - params.cOverN
        char = CharData.from_a0(state.q, s0, aValue, params, eta0=float(g[0]))
        sol = solve_eta(char, params, span, tol, stopAtZero=False)
        worst = max(worst, float(np.max(np.abs(sol(ts)[:, 2] - g) / g)))

    results = [_result("positive_particular_solution", worst, 1e-6, n)]

    if params.hasBackground:
        char = _reference_line(params)
        assert char.A0 is not None
        pair = build_envelopes(char, params, tol)
        assert pair.eta2At0 is not None
        mid = CharData.from_a0(
            char.q0, char.s0, char.A0, params, eta0=0.5 * (pair.eta1At0 + pair.eta2At0)
        )
        T = pair.span
        sol = solve_eta(mid, params, 2.0 * T, tol, stopAtZero=False)
        ts = np.linspace(0.0, T, 500)
        rho = _density(sol(ts), mid.sTilde0, params.N)
        rhoLater = _density(sol(ts + T), mid.sTilde0, params.N)
        drift = float(np.max(np.abs(rhoLater - rho) / np.abs(rho)))
        results.append(_result("density_periodicity", drift, 1e-5, 1))

    return results


# -----
# _density
# -----
def _density(ys: Vector, sTilde0: float, N: int) -> Vector:
    gamma = (ys[:, 1] / sTilde0) ** (1.0 / N)
    return gamma ** (N - 1) / ys[:, 2]


# ============================================
#              Decay checks
# ============================================
def _check_decay(
    rng: np.random.Generator, params: ModelParams, count: int, tol: Tolerances
) -> list[CheckResult]:
    """
    c = 0: q decays like `1/t` and s like `t^-N` (with a logarithmic
    correction for N = 2) on every orbit.
    """
    N = params.N
    rateTol = cfg.decayRateTolN2 if params.isPlanar else cfg.decayRateTol
    policy = HorizonPolicy()
    worst = 0.0
    n = max(1, count // 4)
    for _ in range(n):
        state = _random_state(rng, params)
        horizon = policy.zero_background_horizon(state.q, state.sTilde, params)
        traj = integrate_qs(state, horizon, params, tol)
        qSlope, sSlope = decay_exponents(traj, (cfg.decayFitStart * horizon, horizon))
        worst = max(worst, abs(qSlope + 1.0), abs(sSlope + N) / N)
    return [_result("decay_rates", worst, rateTol, n)]


# ============================================
#            Integrator checks
# ============================================
def _check_integrator(
    _rng: np.random.Generator, _params: ModelParams, _count: int, _tol: Tolerances
) -> list[CheckResult]:
    """
    Fifth-order convergence on the harmonic oscillator with fixed steps
    and the blow-up time of `y' = -y^2` from `y(0) = 1`.
    """

    def oscillator(_t: float, y: Vector) -> Vector:
        return np.array([y[1], -y[0]])

    errors = []
    for nSteps in (20, 40):
        span = 2.0 * np.pi
        sol = integrate(
            IvpProblem(
                rhs=oscillator,
                t0=0.0,
                y0=np.array([1.0, 0.0]),
                tEnd=span,
                fixedStep=span / nSteps,
            )
        )
        errors.append(float(np.max(np.abs(sol.yFinal - np.array([1.0, 0.0])))))
    order = np.log2(errors[0] / errors[1])

    riccati = integrate(
        IvpProblem(rhs=lambda _t, y: -y * y, t0=0.0, y0=np.array([-1.0]), tEnd=2.0)
    )
    tc = riccati.tcEstimate if riccati.termination == Termination.BLOWUP else np.inf

    return [
        _result(
            "integrator_order", abs(order - 5.0) / 5.0, 0.10, 2, f"order {order!r}"
        ),
        _result("riccati_blowup_time", abs(tc - 1.0), 1e-3, 1, f"t_c {tc!r}"),
    ]


# ============================================
#          Concentration checks
# ============================================
def _check_concentration(
    rng: np.random.Generator, params: ModelParams, count: int, tol: Tolerances
) -> list[CheckResult]:
    """
    The one-dimensional concentration criterion against integration of
    the linear (a, b) model, away from the boundary of the criterion.
    """
    k, c = params.k, params.c
    mismatches = compared = 0
    for _ in range(count):
        sTilde0 = float(rng.uniform(0.1, 3.0))
        q0 = float(rng.uniform(-3.0, 3.0))
        boundary = k * (2.0 * sTilde0 - c) if c > 0 else 2.0 * k * sTilde0
        if abs(q0 * q0 - boundary) <= 1e-6 * max(1.0, abs(boundary)):
            continue
        compared += 1
        predicted = one_dim_concentration_check(q0, sTilde0, k, c)
        observed = one_dim_concentration_oracle(q0, sTilde0, k, c, tol).concentrates
        mismatches += predicted != observed
    return [_result("one_dim_concentration", mismatches, 0, compared)]


_positive_bg_checks: list[tuple[str, Callable[..., list[CheckResult]]]] = [
    ("trajectories", _check_trajectories),
    ("extrema", _check_extrema),
    ("a_quantity", _check_a_quantity),
    ("a_zeros", _check_a_zeros),
    ("envelopes", _check_envelopes),
    ("breakdown", _check_breakdown),
    ("particular_solution", _check_particular_solution),
    ("concentration", _check_concentration),
    ("integrator", _check_integrator),
]

_zero_bg_checks: list[tuple[str, Callable[..., list[CheckResult]]]] = [
    ("trajectories", _check_trajectories),
    ("a_quantity", _check_a_quantity),
    ("envelopes", _check_zero_bg_envelopes),
    ("breakdown", _check_breakdown),
    ("particular_solution", _check_particular_solution),
    ("decay", _check_decay),
    ("concentration", _check_concentration),
    ("integrator", _check_integrator),
]
