from typing import Any
from typing import Self

from cleo.helpers import option

from epcritical.core.model import ModelParams
from epcritical.core.ode import Tolerances
from epcritical.core.qs import QSState
from epcritical.core.qs import integrate_qs
from epcritical.core.qs import orbit_geometry
from epcritical.exceptions import exceptions
from epcritical.utilities import reports
import epcritical.utilities.config as cfg

from .base import BaseCommand
from .base import common_options
from .base import domainErrors

# Starting points for the default portrait, as multiples of c/N (c > 0)
_defaultFractions = (0.2, 0.5, 0.8, 1.5, 2.5)

# q0 values of the default c = 0 portrait, all started at s0 = 1
_defaultZeroBgQ0 = (-1.0, 0.0, 1.0)


# ============================================
#                PhaseCommand
# ============================================
class PhaseCommand(BaseCommand):
    name = "phase"

    description = "Exports (q, s) phase-plane trajectories."

    options = [
        option("orbit", None, "Starting point `q0,s0`.", flag=False, multiple=True),
        option("periods", None, "Periods per orbit (c > 0).", flag=False, default="1"),
        option(
            "horizon", None, "Span of each orbit (c = 0).", flag=False, default="20"
        ),
        option("samples", None, "Rows per orbit.", flag=False, default="200"),
        *common_options(),
    ]

    help = """
    Integrates the (q, s) subsystem from one or more starting points and
    writes `orbit,t,q,s,s_tilde,gamma,R_drift`, where `R_drift` is the
    relative drift of the trajectory invariant.

    Repeat `--orbit` for several orbits. Without it, c > 0 draws a family
    of nested orbits through q0 = 0 and c = 0 three orbits through s0 = 1.

    Examples
    --------
    ep-critical phase --params k=1,c=1,N=4
    ep-critical phase --params k=1,c=0,N=3 --orbit -1,1 --horizon 50
    """

    defaultFormat = "csv"

    # -----
    # handle
    # -----
    def handle(self: Self) -> int:
        try:
            runConfig = self._setup()
            params = runConfig.model_params()
            starts = self._starts(params)
            samples = self._number("samples", int)
            if samples < 2:
                raise exceptions.ConfigError("--samples", "must be at least 2")
            spans = self._spans(starts, params)

            rows = []
            tol = runConfig.tolerance_pair()
            for index, (start, span) in enumerate(zip(starts, spans)):
                self.write(f"Orbit {index}...")
                rows.extend(phase_rows(index, start, span, params, tol, samples))
                self.overwrite(f"Orbit {index}... <success>✓</success>\n")
        except domainErrors as err:
            self.line(str(err))
            return cfg.exitError

        if self._format(runConfig) == "csv":
            text = reports.to_csv(rows, ["orbit", *cfg.phaseColumns])
        else:
            text = reports.to_json(rows)
        self._emit(text, runConfig)

        return cfg.exitAllGlobal

    # -----
    # _starts
    # -----
    def _starts(self: Self, params: ModelParams) -> list[QSState]:
        """
        Starting points as `(q0, s_tilde0)`.

        Raises
        ------
        InvalidStateError
            If a starting point has `s~0 <= 0`.
        """
        given = self.option("orbit") or []
        if given:
            points = [self._floats("orbit", text, 2) for text in given]
        elif params.hasBackground:
            points = [[0.0, (f - 1.0) * params.cOverN] for f in _defaultFractions]
        else:
            points = [[q0, 1.0] for q0 in _defaultZeroBgQ0]

        starts = []
        for q0, s0 in points:
            sTilde0 = s0 + params.cOverN
            if not sTilde0 > 0:
                raise exceptions.InvalidStateError("s_tilde0", sTilde0, "> 0")
            starts.append(QSState(q0, sTilde0))
        return starts

    # -----
    # _spans
    # -----
    def _spans(self: Self, starts: list[QSState], params: ModelParams) -> list[float]:
        if not params.hasBackground:
            horizon = self._number("horizon", float)
            if not horizon > 0:
                raise exceptions.ConfigError("--horizon", "must be positive")
            return [horizon] * len(starts)

        periods = self._number("periods", float)
        if not periods > 0:
            raise exceptions.ConfigError("--periods", "must be positive")
        return [
            periods * orbit_geometry(start.q, start.sTilde, params).period
            for start in starts
        ]


# ============================================
#                 phase_rows
# ============================================
def phase_rows(
    index: int,
    start: QSState,
    span: float,
    params: ModelParams,
    tol: Tolerances,
    samples: int,
) -> list[dict[str, Any]]:
    trajectory = integrate_qs(start, span, params, tol)
    columns = ["orbit", *cfg.phaseColumns]
    return [dict(zip(columns, [index, *row])) for row in trajectory.rows(samples)]
