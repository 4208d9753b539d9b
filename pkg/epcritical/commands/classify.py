from functools import partial
from typing import Self

from cleo.helpers import option

from epcritical.core.model import CharData
from epcritical.core.model import Classification
from epcritical.core.model import ModelParams
from epcritical.core.model import Verdict
from epcritical.core.model import characteristics_from_profile
from epcritical.core.threshold import classify
from epcritical.exceptions import exceptions
from epcritical.utilities import reports
from epcritical.utilities.parallel import map_ordered
from epcritical.utilities.profiles import load_profile
from epcritical.utilities.run_config import RunConfig
import epcritical.utilities.config as cfg

from .base import BaseCommand
from .base import common_options
from .base import domainErrors


# ============================================
#              ClassifyCommand
# ============================================
class ClassifyCommand(BaseCommand):
    name = "classify"

    description = "Decides global existence or breakdown per characteristic."

    options = [
        option("point", None, "Coordinates `r,u0,phi0r,u0r,rho0`.", flag=False),
        option("profile", None, "Radial profile file (CSV or JSON).", flag=False),
        option("radii", None, "Comma-separated radii to classify.", flag=False),
        option("radii-grid", None, "Number of evenly spaced radii.", flag=False),
        *common_options(),
    ]

    help = """
    Classifies one point given in threshold coordinates, or every requested
    radius of a radial profile, and writes one record per characteristic.

    `--point` takes `r,u0,phi0r,u0r,rho0`, so that `q0 = u0/r`,
    `s0 = -phi0r/r`, `p0 = u0r` and the density is `rho0`.

    With `--profile`, give either `--radii` or `--radii-grid`; the grid
    spans the sampled radii.

    Exit codes: 0 if every verdict is Global, 2 if any is Breakdown, 3 if any
    is Marginal and none is Breakdown, 1 on error.

    Examples
    --------
    ep-critical classify --point 1,0.1,0.1,-0.3,0.5 --params k=1,c=1,N=4
    ep-critical classify --profile profile.csv --radii-grid 10 --out report.json
    """

    # -----
    # handle
    # -----
    def handle(self: Self) -> int:
        try:
            runConfig = self._setup()
            params = runConfig.model_params()
            chars = self._characteristics(params)
            results = self._classify(chars, params, runConfig)
        except domainErrors as err:
            self.line(str(err))
            return cfg.exitError

        records = [reports.classification_record(c, r) for c, r in zip(chars, results)]
        if self._format(runConfig) == "csv":
            rows = [reports.flatten_classification(rec) for rec in records]
            text = reports.to_csv(rows, reports.classificationColumns)
        else:
            text = reports.to_json(records)

        for char, result in zip(chars, results):
            self.line(
                f"beta={char.beta!r}: {self._verdict_tag(result.verdict)} "
                f"({result.reason.value}, margin {result.margin:.3g})"
            )
        self._emit(text, runConfig)

        return _exit_code(results)

    # -----
    # _characteristics
    # -----
    def _characteristics(self: Self, params: ModelParams) -> list[CharData]:
        point = self.option("point")
        profilePath = self.option("profile")

        if point and profilePath:
            detail = "give --point or --profile, not both"
            raise exceptions.ConfigError("classify", detail)

        if point:
            alpha, x, y, z, omega = self._floats("point", point, 5)
            return [CharData.from_point(alpha, x, y, z, omega, params)]

        if not profilePath:
            detail = "one of --point or --profile is required"
            raise exceptions.ConfigError("classify", detail)

        self.write("Loading profile...")
        profile = load_profile(profilePath)
        self.overwrite("Loading profile... <success>✓</success>\n")

        if self.option("radii"):
            radii = self._floats("radii", self.option("radii"))
        elif self.option("radii-grid"):
            nRadii = self._number("radii-grid", int)
            if nRadii < 1:
                raise exceptions.InvalidSweepError("--radii-grid must be >= 1")
            radii = list(profile.grid(nRadii))
        else:
            detail = "--profile needs --radii or --radii-grid"
            raise exceptions.ConfigError("classify", detail)

        return characteristics_from_profile(profile, radii, params)

    # -----
    # _classify
    # -----
    def _classify(
        self: Self, chars: list[CharData], params: ModelParams, runConfig: RunConfig
    ) -> list[Classification]:
        self.write("Classifying...")
        task = partial(classify, params=params, policy=runConfig.margin_policy())
        results = map_ordered(task, chars)
        self.overwrite("Classifying... <success>✓</success>\n")
        return results


# -----
# _exit_code
# -----
def _exit_code(results: list[Classification]) -> int:
    verdicts = {result.verdict for result in results}
    if Verdict.BREAKDOWN in verdicts:
        return cfg.exitAnyBreakdown
    if Verdict.MARGINAL in verdicts:
        return cfg.exitAnyMarginal
    return cfg.exitAllGlobal
