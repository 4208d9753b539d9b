from functools import partial
from typing import Any
from typing import Self

from cleo.helpers import option
import numpy as np

from epcritical.core.aquantity import a_supremum_zero_bg
from epcritical.core.aquantity import a_window
from epcritical.core.model import CharData
from epcritical.core.model import ModelParams
from epcritical.core.qs import qs_blowup_check
from epcritical.core.threshold import classify
from epcritical.exceptions import exceptions
from epcritical.utilities import reports
from epcritical.utilities.parallel import map_ordered
import epcritical.utilities.config as cfg

from .base import BaseCommand
from .base import common_options
from .base import domainErrors


# ============================================
#                SweepCommand
# ============================================
class SweepCommand(BaseCommand):
    name = "sweep"

    description = "Maps Global and Breakdown regions over a (u0r, rho0) grid."

    options = [
        option("base", None, "Fixed coordinates `r,u0,phi0r`.", flag=False),
        option("u0r-range", None, "Grid of u0r values `lo,hi,n`.", flag=False),
        option("rho0-range", None, "Grid of rho0 values `lo,hi,m`.", flag=False),
        option("a-lines", None, "Walk n evenly spaced a-lines.", flag=False),
        option("a-values", None, "Walk lines at these values of a.", flag=False),
        *common_options(),
    ]

    help = """
    Fixes `r,u0,phi0r` and classifies every cell of a grid in `(u0r, rho0)`,
    writing `u0r,rho0,a,verdict,margin` per cell. Cells within the margin
    band of a threshold come out Marginal.

    With `--a-lines` or `--a-values` the grid follows lines of constant
    `a = (u0 u0r + k phi0r) / (r rho0)` instead: for each `a` and each rho0
    of the rho0 grid, `u0r = (a r rho0 - k phi0r) / u0`. This needs
    `u0 != 0`. `--a-lines n` spaces the lines inside the interval of `a`
    where global solutions are possible.

    Examples
    --------
    ep-critical sweep --base 1,0.1,0.1 --u0r-range -2,2,41 --rho0-range 0.1,5,50
    ep-critical sweep --base 1,0.1,0.1 --rho0-range 0.5,10,200 --a-values 0.15
    """

    defaultFormat = "csv"

    # -----
    # handle
    # -----
    def handle(self: Self) -> int:
        try:
            runConfig = self._setup()
            params = runConfig.model_params()
            cells = self._cells(params)
            self.write(f"Classifying {len(cells)} cells...")
            task = partial(
                _classify_cell,
                params=params,
                policy=runConfig.margin_policy(estimateBreakdownTime=False),
            )
            rows = map_ordered(task, cells)
            self.overwrite(
                f"Classifying {len(cells)} cells... <success>✓</success>\n"
            )
        except domainErrors as err:
            self.line(str(err))
            return cfg.exitError

        if self._format(runConfig) == "csv":
            text = reports.to_csv(rows, cfg.regionColumns)
        else:
            text = reports.to_json(rows)
        self._emit(text, runConfig)

        return cfg.exitAllGlobal

    # -----
    # _cells
    # -----
    def _cells(self: Self, params: ModelParams) -> list[tuple[float, ...]]:
        """
        Grid cells as `(r, u0, phi0r, u0r, rho0)`.

        Raises
        ------
        InvalidSweepError
            If the grid is empty or an a-line cannot be built.
        """
        if not self.option("base"):
            raise exceptions.InvalidSweepError("--base r,u0,phi0r is required")
        r, u0, phi0r = self._floats("base", self.option("base"), 3)
        if not r > 0:
            raise exceptions.InvalidSweepError("the radius in --base must be positive")

        rho0s = self._grid("rho0-range")
        if np.any(rho0s < 0):
            raise exceptions.InvalidSweepError("rho0 values must be nonnegative")

        aValues = self._a_values(r, u0, phi0r, params)
        if aValues is None:
            u0rs = self._grid("u0r-range")
            return [(r, u0, phi0r, z, w) for z in u0rs for w in rho0s]

        if u0 == 0:
            raise exceptions.InvalidSweepError("lines of constant a need u0 != 0")
        positive = rho0s[rho0s > 0]
        if positive.size == 0:
            raise exceptions.InvalidSweepError("lines of constant a need rho0 > 0")
        k = params.k
        return [
            (r, u0, phi0r, (a * r * w - k * phi0r) / u0, w)
            for a in aValues
            for w in positive
        ]

    # -----
    # _grid
    # -----
    def _grid(self: Self, name: str) -> np.ndarray:
        text = self.option(name)
        if not text:
            raise exceptions.InvalidSweepError(f"--{name} lo,hi,n is required")
        lo, hi, n = self._floats(name, text, 3)
        if n < 1 or n != int(n):
            raise exceptions.InvalidSweepError(f"--{name} needs a positive count")
        if not np.isfinite(lo) or not np.isfinite(hi):
            raise exceptions.InvalidSweepError(f"--{name} needs finite bounds")
        return np.linspace(lo, hi, int(n))

    # -----
    # _a_values
    # -----
    def _a_values(
        self: Self, r: float, u0: float, phi0r: float, params: ModelParams
    ) -> list[float] | None:
        if self.option("a-values"):
            return self._floats("a-values", self.option("a-values"))
        if not self.option("a-lines"):
            return None

        nLines = self._number("a-lines", int)
        if nLines < 1:
            raise exceptions.InvalidSweepError("--a-lines must be >= 1")
        lo, hi = admissible_a_range(u0 / r, -phi0r / r, params)
        return [lo + (j + 1) * (hi - lo) / (nLines + 1) for j in range(nLines)]


# ============================================
#             admissible_a_range
# ============================================
def admissible_a_range(
    q0: float, s0: float, params: ModelParams
) -> tuple[float, float]:
    """
    The interval of `a` worth sweeping for fixed `(q0, s0)`: the window
    of the orbit for c > 0; for c = 0 the stretch between the Riccati
    threshold `-k/(N-2)` and `0` (q0 > 0) or the apex bound (q0 < 0).
    For N = 2, which has no Riccati threshold, the lower end is `k`
    below the upper one.

    Raises
    ------
    InvalidSweepError
        If no global solution exists on any line.
    """
    k, N = params.k, params.N
    if params.hasBackground:
        if qs_blowup_check(s0, params):
            raise exceptions.InvalidSweepError("s0 <= -c/N: every line breaks down")
        lo, hi = a_window(q0, s0, params)
    else:
        if not s0 > 0:
            raise exceptions.InvalidSweepError("c = 0 needs s0 > 0")
        hi = a_supremum_zero_bg(q0, s0, params) if q0 < 0 else 0.0
        lo = -k / (N - 2) if N > 2 else hi - k
    if not lo < hi:
        raise exceptions.InvalidSweepError("the admissible interval of a is empty")
    return lo, hi


# -----
# _classify_cell
# -----
def _classify_cell(cell: tuple[float, ...], params: ModelParams, policy: Any) -> dict:
    r, u0, phi0r, u0r, rho0 = cell
    char = CharData.from_point(r, u0, phi0r, u0r, rho0, params)
    result = classify(char, params, policy)
    return {
        "u0r": u0r,
        "rho0": rho0,
        "a": char.A0,
        "verdict": result.verdict.value,
        "margin": result.margin,
    }
