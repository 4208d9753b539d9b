from typing import Any
from typing import Self

from cleo.helpers import option
import numpy as np

from epcritical.core.model import CharData
from epcritical.core.model import ModelParams
from epcritical.core.ode import HorizonPolicy
from epcritical.core.ode import IvpSolution
from epcritical.core.ode import solve_characteristic
from epcritical.core.qs import orbit_geometry
from epcritical.core.qs import qs_blowup_check
from epcritical.exceptions import exceptions
from epcritical.utilities import reports
import epcritical.utilities.config as cfg

from .base import BaseCommand
from .base import common_options
from .base import domainErrors


# ============================================
#               SimulateCommand
# ============================================
class SimulateCommand(BaseCommand):
    name = "simulate"

    description = "Integrates one characteristic and writes its trajectory."

    options = [
        option("point", None, "Initial data `r,u0,phi0r,u0r,rho0`.", flag=False),
        option("horizon", None, "Final time. Defaults to the run horizon.", flag=False),
        option("samples", None, "Number of output rows.", flag=False, default="401"),
        *common_options(),
    ]

    help = """
    Integrates the characteristic system in `(rho, p, q, s)` from one
    point and writes `t,rho,p,q,s,eta,w,A,Gamma` on an even time grid.
    Derived columns are empty where they are undefined (zero density, or
    `s~ <= 0`). The integration stops early at a breakdown, in which
    case the last row sits just before it.

    Without `--horizon`, c > 0 integrates over the configured number of
    periods of the (q, s) orbit and c = 0 uses the decay-scale horizon.

    Examples
    --------
    ep-critical simulate --point 1,0.1,0.1,0.2,1.0 --params k=1,c=1,N=4
    ep-critical simulate --point 1,0.1,0.1,-3,0.5 --horizon 5 --format json
    """

    defaultFormat = "csv"

    # -----
    # handle
    # -----
    def handle(self: Self) -> int:
        try:
            runConfig = self._setup()
            params = runConfig.model_params()
            if not self.option("point"):
                raise exceptions.ConfigError("--point", "is required")
            char = CharData.from_point(
                *self._floats("point", self.option("point"), 5), params
            )
            horizon = self._horizon(char, params, runConfig.horizon.to_policy())
            samples = self._number("samples", int)
            if samples < 2:
                raise exceptions.ConfigError("--samples", "must be at least 2")

            self.write("Integrating...")
            sol = solve_characteristic(
                char, params, horizon, runConfig.tolerance_pair()
            )
            self.overwrite("Integrating... <success>✓</success>\n")
        except domainErrors as err:
            self.line(str(err))
            return cfg.exitError

        rows = trajectory_rows(sol, char, params, samples)
        summary = {
            "termination": sol.termination.value,
            "tc_estimate": sol.tcEstimate,
            "t_final": sol.tFinal,
            "horizon": horizon,
            "steps": sol.nSteps,
        }
        self.line(f"Termination: <info>{summary['termination']}</info>")
        if sol.tcEstimate is not None:
            self.line(f"Breakdown near t = <error>{sol.tcEstimate:.6g}</error>")

        if self._format(runConfig) == "csv":
            text = reports.to_csv(rows, cfg.trajectoryColumns)
        else:
            text = reports.to_json({"summary": summary, "trajectory": rows})
        self._emit(text, runConfig)

        return cfg.exitAllGlobal

    # -----
    # _horizon
    # -----
    def _horizon(
        self: Self, char: CharData, params: ModelParams, policy: HorizonPolicy
    ) -> float:
        horizon = self._number("horizon", float)
        if horizon is not None:
            if not horizon > 0:
                raise exceptions.ConfigError("--horizon", "must be positive")
            return horizon
        return default_horizon(char, params, policy)


# ============================================
#              default_horizon
# ============================================
def default_horizon(
    char: CharData, params: ModelParams, policy: HorizonPolicy
) -> float:
    """
    Period-based horizon for c > 0 (the linearized period when the
    orbit does not close), decay-scale horizon for c = 0.
    """
    if not params.hasBackground:
        return policy.zero_background_horizon(char.q0, char.s0, params)
    if qs_blowup_check(char.s0, params):
        return policy.periodic_horizon(2.0 * np.pi / np.sqrt(params.k * params.c))
    geometry = orbit_geometry(char.q0, char.sTilde0, params)
    return policy.periodic_horizon(geometry.period)


# ============================================
#              trajectory_rows
# ============================================
def trajectory_rows(
    sol: IvpSolution, char: CharData, params: ModelParams, samples: int
) -> list[dict[str, Any]]:
    """
    Samples a characteristic solution and adds `eta = 1/rho`,
    `w = p/rho`, `A = (q p - k s)/rho` and
    `Gamma = (s~ / s~0)^(1/N)`.
    """
    ts, ys = sol.sample(samples)
    cOverN, k, N = params.cOverN, params.k, params.N
    rows = []
    for t, (rho, p, q, s) in zip(ts, ys):
        sTilde = s + cOverN
        dense = char.hasDensity and rho > 0
        gammaDefined = char.sTilde0 > 0 and sTilde > 0
        rows.append(
            {
                "t": t,
                "rho": rho,
                "p": p,
                "q": q,
                "s": s,
                "eta": 1.0 / rho if dense else None,
                "w": p / rho if dense else None,
                "A": (q * p - k * s) / rho if dense else None,
                "Gamma": (sTilde / char.sTilde0) ** (1.0 / N) if gammaDefined else None,
            }
        )
    return rows
