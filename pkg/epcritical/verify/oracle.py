from dataclasses import dataclass
from enum import Enum
import logging

import numpy as np

from epcritical.core.model import CharData
from epcritical.core.model import ModelParams
from epcritical.core.model import Verdict
from epcritical.core.ode import HorizonPolicy
from epcritical.core.ode import IvpSolution
from epcritical.core.ode import Termination
from epcritical.core.ode import Tolerances
from epcritical.core.ode import solve_characteristic
from epcritical.core.ode import solve_eta
from epcritical.core.qs import QSState
from epcritical.core.qs import decay_exponents
from epcritical.core.qs import integrate_qs
from epcritical.core.qs import orbit_geometry
from epcritical.exceptions import exceptions
import epcritical.utilities.config as cfg

logger = logging.getLogger(__name__)

# Samples of the dense output checked for positivity, on top of the steps
_positivitySamples = 4000

# |w| at breakdown must stay below this multiple of max(1, |w0|)
_wBoundFactor = 1e6


# ============================================
#                OracleKind
# ============================================
class OracleKind(str, Enum):
    GLOBAL_WITHIN_HORIZON = "GlobalWithinHorizon"
    BLOWUP = "Blowup"
    INCONCLUSIVE = "Inconclusive"


# ============================================
#               OracleOutcome
# ============================================
@dataclass(frozen=True)
class OracleOutcome:
    """
    What direct integration observed for one characteristic.

    `ratesConfirmed` is only set for c = 0 global outcomes, where the
    horizon is finite and the decay rates of q and s back the claim.
    `wBounded` is only set when eta reached zero.
    """

    kind: OracleKind
    horizon: float
    tc: float | None = None
    minEta: float | None = None
    ratesConfirmed: bool | None = None
    wBounded: bool | None = None
    detail: str = ""

    @property
    def verdict(self) -> Verdict | None:
        if self.kind == OracleKind.GLOBAL_WITHIN_HORIZON:
            return Verdict.GLOBAL
        if self.kind == OracleKind.BLOWUP:
            return Verdict.BREAKDOWN
        return None


# ============================================
#               oracle_outcome
# ============================================
def oracle_outcome(
    char: CharData,
    params: ModelParams,
    policy: HorizonPolicy = HorizonPolicy(),
    tol: Tolerances = Tolerances(),
) -> OracleOutcome:
    """
    Integrates one characteristic directly and reports whether it broke
    down, independently of the envelope machinery.

    With positive density the eta form is integrated and breakdown is a
    zero of eta. Otherwise the characteristic system is integrated and
    breakdown is a Riccati blow-up.

    Parameters
    ----------
    char : CharData
        Initial data.

    params : ModelParams
        Model parameters.

    policy : HorizonPolicy
        How long to integrate and when to extend (c = 0).

    tol : Tolerances
        Integrator tolerances.

    Returns
    -------
    OracleOutcome
        Never Blowup without an observed breakdown, never Global
        without reaching the horizon.
    """
    if params.hasBackground:
        return _positive_background(char, params, policy, tol)
    return _zero_background(char, params, policy, tol)


# -----
# _positive_background
# -----
def _positive_background(
    char: CharData, params: ModelParams, policy: HorizonPolicy, tol: Tolerances
) -> OracleOutcome:
    if char.hasDensity and char.sTilde0 > 0:
        T = orbit_geometry(char.q0, char.sTilde0, params).period
        horizon = policy.periodic_horizon(T)
        sol = solve_eta(char, params, horizon, tol)
        return _eta_outcome(sol, char, horizon)

    linearPeriod = 2.0 * np.pi / np.sqrt(params.k * params.c)
    horizon = policy.periodic_horizon(linearPeriod)
    sol = solve_characteristic(char, params, horizon, tol)
    if sol.termination == Termination.BLOWUP:
        return OracleOutcome(OracleKind.BLOWUP, horizon, sol.tcEstimate)
    if sol.termination == Termination.REACHED_END:
        return OracleOutcome(OracleKind.GLOBAL_WITHIN_HORIZON, horizon)
    return OracleOutcome(OracleKind.INCONCLUSIVE, horizon, detail=sol.message)


# -----
# _zero_background
# -----
def _zero_background(
    char: CharData, params: ModelParams, policy: HorizonPolicy, tol: Tolerances
) -> OracleOutcome:
    if not char.s0 > 0:
        raise exceptions.InvalidStateError("s0", char.s0, "s0 > 0 when c = 0")

    k = params.k
    horizon = policy.zero_background_horizon(char.q0, char.s0, params)

    while True:
        if char.hasDensity:
            sol = solve_eta(char, params, horizon, tol)
            if sol.termination != Termination.REACHED_END:
                return _eta_outcome(sol, char, horizon)
            q, _s, _eta, w = sol.yFinal
            pending = q <= 0 or w < 0
        else:
            sol = solve_characteristic(char, params, horizon, tol)
            if sol.termination == Termination.BLOWUP:
                return OracleOutcome(OracleKind.BLOWUP, horizon, sol.tcEstimate)
            if sol.termination != Termination.REACHED_END:
                return OracleOutcome(
                    OracleKind.INCONCLUSIVE, horizon, detail=sol.message
                )
            _rho, p, q, s = sol.yFinal
            pending = q <= 0 or q * p - k * s < 0

        if not pending:
            break
        if horizon >= policy.maxHorizon:
            return OracleOutcome(
                OracleKind.INCONCLUSIVE, horizon, detail="zero still pending"
            )
        horizon = min(policy.maxHorizon, horizon * policy.extensionFactor)
        logger.debug("extending c = 0 horizon to %r", horizon)

    confirmed = _rates_confirmed(char, params, horizon, tol)
    if char.hasDensity:
        outcome = _eta_outcome(sol, char, horizon)
        if outcome.kind != OracleKind.GLOBAL_WITHIN_HORIZON:
            return outcome
        minEta = outcome.minEta
    else:
        minEta = None

    if not confirmed:
        return OracleOutcome(
            OracleKind.INCONCLUSIVE,
            horizon,
            minEta=minEta,
            ratesConfirmed=False,
            detail="decay rates not confirmed",
        )
    return OracleOutcome(
        OracleKind.GLOBAL_WITHIN_HORIZON, horizon, minEta=minEta, ratesConfirmed=True
    )


# -----
# _eta_outcome
# -----
def _eta_outcome(sol: IvpSolution, char: CharData, horizon: float) -> OracleOutcome:
    hit = sol.first_event("eta_zero")
    if hit is not None:
        w = float(hit.state[3])
        wScale = max(1.0, abs(char.w0 or 0.0))
        bounded = bool(np.isfinite(w) and abs(w) < _wBoundFactor * wScale)
        return OracleOutcome(OracleKind.BLOWUP, horizon, hit.time, 0.0, None, bounded)

    if sol.termination != Termination.REACHED_END:
        return OracleOutcome(OracleKind.INCONCLUSIVE, horizon, detail=sol.message)

    _ts, dense = sol.sample(_positivitySamples)
    eta = np.concatenate([sol.ys[:, 2], dense[:, 2]])
    minEta, maxEta = float(eta.min()), float(eta.max())
    if minEta <= cfg.positivityFloor * maxEta:
        return OracleOutcome(
            OracleKind.INCONCLUSIVE, horizon, minEta=minEta, detail="eta grazes zero"
        )
    return OracleOutcome(OracleKind.GLOBAL_WITHIN_HORIZON, horizon, minEta=minEta)


# -----
# _rates_confirmed
# -----
def _rates_confirmed(
    char: CharData, params: ModelParams, horizon: float, tol: Tolerances
) -> bool:
    """
    Checks `q ~ t^-1` and `s ~ t^-N` (`t^-2 / ln t` for N = 2) over the
    tail of the horizon.
    """
    N = params.N
    rateTol = cfg.decayRateTolN2 if params.isPlanar else cfg.decayRateTol
    try:
        traj = integrate_qs(QSState(char.q0, char.s0), horizon, params, tol)
        qSlope, sSlope = decay_exponents(traj, (cfg.decayFitStart * horizon, horizon))
    except (exceptions.InvalidStateError, exceptions.IntegrationError) as err:
        logger.debug("decay fit failed: %s", err)
        return False

    expectedS = float(N)
    confirmed = abs(qSlope + 1.0) <= rateTol and abs(sSlope + expectedS) <= (
        rateTol * expectedS
    )
    if not confirmed:
        logger.debug("decay slopes q=%r s=%r", qSlope, sSlope)
    return confirmed
