from dataclasses import dataclass
from dataclasses import field
import logging
from typing import Any

import numpy as np

from epcritical.core.aquantity import kappa
from epcritical.core.envelopes import build_envelopes
from epcritical.core.envelopes import build_envelopes_zero_bg
from epcritical.core.model import CharData
from epcritical.core.model import Classification
from epcritical.core.model import ModelParams
from epcritical.core.model import Reason
from epcritical.core.model import Verdict
from epcritical.core.ode import HorizonPolicy
from epcritical.core.ode import Termination
from epcritical.core.ode import Tolerances
from epcritical.core.ode import solve_characteristic
from epcritical.core.ode import solve_eta
from epcritical.core.qs import OrbitGeometry
from epcritical.core.qs import QSState
from epcritical.core.qs import orbit_geometry
from epcritical.core.qs import qs_blowup_check
from epcritical.core.qs import s_max_zero_bg
from epcritical.core.qs import trajectory_invariant
from epcritical.exceptions import exceptions
import epcritical.utilities.config as cfg

logger = logging.getLogger(__name__)

# Margin reported for verdicts no perturbation of the data can flip
_certain = 1.0

# Envelope construction failures that leave a valid characteristic undecided
_envelopeFailures = (
    exceptions.EnvelopeNotFoundError,
    exceptions.IntegrationError,
    exceptions.InternalConsistencyError,
    exceptions.QuadratureError,
)


# ============================================
#                MarginPolicy
# ============================================
@dataclass(frozen=True)
class MarginPolicy:
    """
    How classifiers treat the neighbourhood of a deciding inequality.

    Inside the relative band `margin` the verdict is Marginal. The
    integrator tolerances and horizon policy are used for envelopes and
    breakdown-time estimates.
    """

    margin: float = cfg.defaultMargin
    tolerances: Tolerances = field(default_factory=Tolerances)
    horizon: HorizonPolicy = field(default_factory=HorizonPolicy)
    estimateBreakdownTime: bool = True

    # -----
    # __post_init__
    # -----
    def __post_init__(self) -> None:
        if not self.margin >= 0:
            raise exceptions.InvalidParametersError("margin", self.margin, ">= 0")


# ============================================
#             blowup_sufficient
# ============================================
def blowup_sufficient(
    char: CharData, geom: OrbitGeometry, params: ModelParams
) -> bool:
    """
    True when breakdown is certain whatever eta0 and w0 are: kappa is
    absent or not strictly inside the Gamma window (c > 0).
    """
    if char.A0 is None:
        raise exceptions.ZeroDensityError("blowup_sufficient")
    kap = kappa(char.A0, params)
    return kap is None or kap <= geom.gammaMin or kap >= geom.gammaMax


# -----
# _decide
# -----
def _decide(margin: float, policy: MarginPolicy) -> Verdict:
    if margin > policy.margin:
        return Verdict.GLOBAL
    if margin < -policy.margin:
        return Verdict.BREAKDOWN
    return Verdict.MARGINAL


# -----
# _interval_margin
# -----
def _interval_margin(value: float, bound1: float, bound2: float) -> float:
    """
    Signed distance of `value` from the open interval between two
    bounds, relative to the larger bound. Positive inside.
    """
    lo, hi = min(bound1, bound2), max(bound1, bound2)
    scale = max(abs(lo), abs(hi), np.finfo(float).tiny)
    return min(value - lo, hi - value) / scale


# -----
# _above_margin
# -----
def _above_margin(value: float, bound: float) -> float:
    scale = max(abs(value), abs(bound), np.finfo(float).tiny)
    return (value - bound) / scale


# ============================================
#                  classify
# ============================================
def classify(
    char: CharData, params: ModelParams, policy: MarginPolicy = MarginPolicy()
) -> Classification:
    """
    Decides global existence against finite-time breakdown for one
    characteristic, dispatching on the background state.
    """
    if params.hasBackground:
        return classify_positive_background(char, params, policy)
    return classify_zero_background(char, params, policy)


# ============================================
#        classify_positive_background
# ============================================
def classify_positive_background(
    char: CharData, params: ModelParams, policy: MarginPolicy = MarginPolicy()
) -> Classification:
    """
    Classifier for c > 0.

    Zero density and `s0 <= -c/N` always break down. The equilibrium
    orbit uses the harmonic solution of the eta equation. Otherwise
    kappa must lie strictly inside the Gamma window, after which eta0
    (w0 when q0 = 0) must lie strictly between the envelope values at
    t = 0. When the envelopes cannot be built eta is integrated
    directly (`DirectIntegration`).

    Raises
    ------
    InvalidParametersError
        If c = 0.
    """
    if not params.hasBackground:
        raise exceptions.InvalidParametersError("c", params.c, "c > 0")

    if not char.hasDensity:
        return _breakdown(char, params, policy, Reason.ZERO_DENSITY, -_certain)

    if qs_blowup_check(char.s0, params):
        return _breakdown(char, params, policy, Reason.QS_BLOWUP, -_certain)

    assert char.A0 is not None and char.eta0 is not None and char.w0 is not None
    k, c = params.k, params.c

    if abs(char.q0) <= cfg.equilibriumTol and abs(char.s0) <= cfg.equilibriumTol:
        # eta'' + kc eta = k: a circle of radius 1/c around (1/c, 0)
        value = (char.eta0 - 1.0 / c) ** 2 + char.w0**2 / (k * c)
        margin = (1.0 / c**2 - value) * c**2
        return _finish(char, params, policy, Reason.EQUILIBRIUM, margin, {})

    geom = orbit_geometry(char.q0, char.sTilde0, params)
    kap = kappa(char.A0, params)
    evidence: dict[str, Any] = {
        "kappa": kap,
        "gamma_window": [geom.gammaMin, geom.gammaMax],
        "period": geom.period,
    }

    windowMargin = _interval_margin(kap or 0.0, geom.gammaMin, geom.gammaMax)
    evidence["window_margin"] = windowMargin
    if kap is None:
        return _finish(
            char, params, policy, Reason.A_ZERO_SIGN_CONDITION, windowMargin, evidence
        )
    windowVerdict = _decide(windowMargin, policy)
    if windowVerdict != Verdict.GLOBAL:
        return _finish(
            char, params, policy, Reason.KAPPA_OUTSIDE_WINDOW, windowMargin, evidence
        )

    try:
        pair = build_envelopes(char, params, policy.tolerances)
    except _envelopeFailures as err:
        return _direct_verdict(char, params, policy, evidence, err)
    evidence["envelopes"] = pair.to_record()
    evidence["tA"] = [pair.tA1, pair.tA2]
    assert pair.eta2At0 is not None and pair.deta2At0 is not None

    if char.q0 != 0:
        margin = _interval_margin(char.eta0, pair.eta1At0, pair.eta2At0)
    else:
        margin = _interval_margin(char.w0, pair.deta1At0, pair.deta2At0)

    reason = Reason.ENVELOPE_CONTAINMENT
    if _decide(margin, policy) == Verdict.BREAKDOWN:
        reason = Reason.ENVELOPE_VIOLATION
    elif margin > 0:
        margin = min(margin, windowMargin)

    return _finish(char, params, policy, reason, margin, evidence)


# ============================================
#          classify_zero_background
# ============================================
def classify_zero_background(
    char: CharData, params: ModelParams, policy: MarginPolicy = MarginPolicy()
) -> Classification:
    """
    Classifier for c = 0.

    Decision tree:

    * rho0 = 0: global iff q0 > 0 and p0 >= k s0 / q0.
    * N >= 3 and A0 <= -k/(N-2): breakdown.
    * q0 > 0: global if A0 >= 0, else iff eta0 > eta1(0).
    * q0 = 0: global iff w0 > eta1'(0).
    * q0 < 0, A0 >= 0: global iff kappa < (s_max/s0)^(1/N) and
      eta1(0) < eta0 < eta2(0).
    * q0 < 0, A0 < 0: global iff eta0 < eta1(0).

    Envelope failures fall back to integrating eta directly.

    Raises
    ------
    InvalidParametersError
        If c > 0.

    InvalidStateError
        If `s0 <= 0`.
    """
    if params.hasBackground:
        raise exceptions.InvalidParametersError("c", params.c, "c = 0")
    if not char.s0 > 0:
        raise exceptions.InvalidStateError("s0", char.s0, "s0 > 0 when c = 0")

    k, N = params.k, params.N
    q0, s0 = char.q0, char.s0

    if not char.hasDensity:
        if q0 <= 0:
            return _breakdown(
                char, params, policy, Reason.RHO_ZERO_BREAKDOWN, -_certain
            )
        bound = k * s0 / q0
        margin = _above_margin(char.p0, bound)
        if margin >= 0:
            return Classification(Verdict.GLOBAL, Reason.RHO_ZERO_GLOBAL_BRANCH, margin)
        return _finish(char, params, policy, Reason.RHO_ZERO_BREAKDOWN, margin, {})

    assert char.A0 is not None and char.eta0 is not None and char.w0 is not None
    A0 = char.A0
    kap = kappa(A0, params)
    evidence: dict[str, Any] = {"kappa": kap}

    if N > 2:
        threshold = -k / (N - 2)
        if A0 <= threshold:
            margin = (A0 - threshold) / abs(threshold)
            return _breakdown(
                char, params, policy, Reason.RICCATI_THRESHOLD, margin, evidence
            )

    if q0 > 0 and A0 >= 0:
        return Classification(
            Verdict.GLOBAL, Reason.NONNEGATIVE_A, _certain, None, evidence
        )

    sMax = s_max_zero_bg(trajectory_invariant(QSState(q0, s0), params), params)
    gammaApex = (sMax / s0) ** (1.0 / N)
    evidence["gamma_window"] = [0.0, gammaApex]
    evidence["s_max"] = sMax

    if q0 < 0 and A0 >= 0:
        assert kap is not None
        apexMargin = _above_margin(gammaApex, kap)
        evidence["window_margin"] = apexMargin
        if _decide(apexMargin, policy) != Verdict.GLOBAL:
            return _finish(
                char, params, policy, Reason.KAPPA_BEYOND_APEX, apexMargin, evidence
            )

    try:
        pair = build_envelopes_zero_bg(
            char, params, policy.tolerances, policy.horizon
        )
    except _envelopeFailures as err:
        return _direct_verdict(char, params, policy, evidence, err)
    evidence["envelopes"] = pair.to_record()
    evidence["tA"] = [pair.tA1, pair.tA2]

    if q0 > 0:
        margin = _above_margin(char.eta0, pair.eta1At0)
    elif q0 == 0:
        margin = _above_margin(char.w0, pair.deta1At0)
    elif A0 >= 0:
        assert pair.eta2At0 is not None
        margin = min(
            _interval_margin(char.eta0, pair.eta1At0, pair.eta2At0),
            evidence["window_margin"],
        )
    else:
        margin = _above_margin(pair.eta1At0, char.eta0)

    if q0 == 0:
        reason = Reason.DERIVATIVE_ENVELOPE
    elif q0 < 0 and A0 >= 0:
        reason = Reason.ENVELOPE_CONTAINMENT
    else:
        reason = Reason.LOWER_ENVELOPE
    return _finish(char, params, policy, reason, margin, evidence)


# -----
# _finish
# -----
def _finish(
    char: CharData,
    params: ModelParams,
    policy: MarginPolicy,
    reason: Reason,
    margin: float,
    evidence: dict[str, Any],
) -> Classification:
    verdict = _decide(margin, policy)
    if verdict == Verdict.BREAKDOWN:
        return _breakdown(char, params, policy, reason, margin, evidence)
    return Classification(verdict, reason, margin, None, evidence)


# -----
# _breakdown
# -----
def _breakdown(
    char: CharData,
    params: ModelParams,
    policy: MarginPolicy,
    reason: Reason,
    margin: float,
    evidence: dict[str, Any] | None = None,
) -> Classification:
    tc = None
    if policy.estimateBreakdownTime:
        tc = estimate_breakdown_time(char, params, policy)
    return Classification(Verdict.BREAKDOWN, reason, margin, tc, evidence or {})


# ============================================
#               _direct_verdict
# ============================================
def _direct_verdict(
    char: CharData,
    params: ModelParams,
    policy: MarginPolicy,
    evidence: dict[str, Any],
    err: Exception,
) -> Classification:
    """
    Decides from eta itself when the envelopes cannot be built.

    A zero of eta is breakdown at that time, with margin
    `-|w(t_hit)| / max |w|` so that a grazing zero lands in the band.
    Otherwise the margin is `min eta / max eta` over the oracle horizon;
    for c = 0 eta must also be growing when the horizon ends.
    """
    logger.warning("envelopes unavailable, integrating eta directly: %s", err)
    evidence["envelope_error"] = type(err).__name__

    if params.hasBackground:
        horizon = policy.horizon.periodic_horizon(evidence["period"])
    else:
        horizon = policy.horizon.zero_background_horizon(char.q0, char.s0, params)
    sol = solve_eta(char, params, horizon, policy.tolerances)
    _ts, states = sol.sample(cfg.directSamples)

    hit = sol.first_event("eta_zero")
    if hit is not None:
        slope = abs(float(hit.state[3]))
        scale = max(float(np.max(np.abs(states[:, 3]))), slope, np.finfo(float).tiny)
        margin = -slope / scale
        verdict = _decide(margin, policy)
        tc = hit.time if verdict == Verdict.BREAKDOWN else None
        return Classification(verdict, Reason.DIRECT_INTEGRATION, margin, tc, evidence)

    if not sol.success:
        return Classification(
            Verdict.MARGINAL, Reason.DIRECT_INTEGRATION, 0.0, None, evidence
        )

    etas = states[:, 2]
    margin = float(np.min(etas) / np.max(etas))
    if not params.hasBackground and not states[-1, 3] > 0:
        margin = min(margin, 0.0)
    return Classification(
        _decide(margin, policy), Reason.DIRECT_INTEGRATION, margin, None, evidence
    )


# ============================================
#          estimate_breakdown_time
# ============================================
def estimate_breakdown_time(
    char: CharData, params: ModelParams, policy: MarginPolicy = MarginPolicy()
) -> float | None:
    """
    First breakdown time from direct integration: the first zero of eta
    when the density is positive, otherwise the Riccati blow-up of the
    characteristic system. None if nothing happens within the horizon.
    """
    if params.hasBackground:
        if char.sTilde0 > 0:
            horizon = policy.horizon.periodic_horizon(
                orbit_geometry(char.q0, char.sTilde0, params).period
            )
        else:
            linearPeriod = 2 * np.pi / np.sqrt(params.k * params.c)
            horizon = policy.horizon.periodic_horizon(linearPeriod)
    else:
        horizon = policy.horizon.zero_background_horizon(char.q0, char.s0, params)

    if char.hasDensity and char.sTilde0 > 0:
        sol = solve_eta(char, params, horizon, policy.tolerances)
        hit = sol.first_event("eta_zero")
        return hit.time if hit is not None else None

    sol = solve_characteristic(char, params, horizon, policy.tolerances)
    if sol.termination == Termination.BLOWUP:
        return sol.tcEstimate
    return None
