import logging
from pathlib import Path
from typing import Any
from typing import Self

from cleo.commands.command import Command
from cleo.formatters.formatter import Formatter
from cleo.helpers import option

from epcritical.core.model import Verdict
from epcritical.exceptions import exceptions
from epcritical.utilities import reports
from epcritical.utilities.run_config import RunConfig
from epcritical.utilities.run_config import parse_params
import epcritical.utilities.config as cfg

# Library errors a command reports and turns into exit code 1
domainErrors = (
    exceptions.InvalidParametersError,
    exceptions.InvalidStateError,
    exceptions.ZeroDensityError,
    exceptions.ProfileFormatError,
    exceptions.ProfileRangeError,
    exceptions.QuadratureError,
    exceptions.InvalidInvariantError,
    exceptions.IntegrationError,
    exceptions.InternalConsistencyError,
    exceptions.EnvelopeNotFoundError,
    exceptions.InvalidSweepError,
    exceptions.ConfigError,
)


# ============================================
#               common_options
# ============================================
def common_options() -> list:
    """
    Options every command accepts. Flags override the `--config` file.
    """
    return [
        option("config", None, "JSON run configuration file.", flag=False),
        option("params", None, "Model parameters, e.g., `k=1,c=1,N=4`.", flag=False),
        option("tol-rel", None, "Relative integrator tolerance.", flag=False),
        option("tol-abs", None, "Absolute integrator tolerance.", flag=False),
        option("margin", None, "Relative Marginal band.", flag=False),
        option("seed", None, "Root random seed.", flag=False),
        option("out", "o", "Output file; stdout when omitted.", flag=False),
        option("format", None, "Output format: csv or json.", flag=False),
    ]


# ============================================
#                 BaseCommand
# ============================================
class BaseCommand(Command):
    """
    Shared plumbing: styles, logging, the run configuration and output.
    """

    defaultFormat: str = "json"

    # -----
    # _stylize
    # -----
    def _stylize(self: Self) -> None:
        self.add_style("info", fg="blue")
        self.add_style("warning", fg="yellow")
        self.add_style("error", fg="red")
        self.add_style("success", fg="green")

    # -----
    # _configure_logging
    # -----
    def _configure_logging(self: Self) -> None:
        """
        Maps `-v`, `-vv` and `-vvv` onto WARNING, INFO and DEBUG for the
        library loggers.
        """
        level = logging.ERROR
        if self.io.is_debug():
            level = logging.DEBUG
        elif self.io.is_very_verbose():
            level = logging.INFO
        elif self.io.is_verbose():
            level = logging.WARNING
        logging.basicConfig(
            level=level,
            format="%(levelname)s %(name)s: %(message)s",
            force=True,
        )

    # -----
    # _setup
    # -----
    def _setup(self: Self) -> RunConfig:
        self._stylize()
        self._configure_logging()
        return self._run_config()

    # -----
    # _run_config
    # -----
    def _run_config(self: Self) -> RunConfig:
        """
        Loads `--config` and applies the flag overrides.

        Raises
        ------
        ConfigError
            If the file or a flag is invalid.
        """
        runConfig = RunConfig.load(self.option("config"))

        overrides: dict[str, Any] = {}
        if self.option("params"):
            overrides.update(parse_params(self.option("params")))
        overrides["tolerances.rel"] = self._number("tol-rel", float)
        overrides["tolerances.abs"] = self._number("tol-abs", float)
        overrides["margin"] = self._number("margin", float)
        overrides["seed"] = self._number("seed", int)
        overrides["output.out"] = self.option("out")

        fmt = self.option("format")
        if fmt is not None and fmt not in cfg.outputFormats:
            raise exceptions.ConfigError("--format", f"`{fmt}` is not csv or json")
        overrides["output.format"] = fmt

        return runConfig.with_overrides(overrides)

    # -----
    # _number
    # -----
    def _number(self: Self, name: str, kind: type) -> Any:
        value = self.option(name)
        if value is None:
            return None
        try:
            return kind(value)
        except ValueError as err:
            detail = f"`{value}` is not a valid {kind.__name__}"
            raise exceptions.ConfigError(f"--{name}", detail) from err

    # -----
    # _floats
    # -----
    def _floats(
        self: Self, name: str, text: str, count: int | None = None
    ) -> list[float]:
        """
        Parses a comma-separated list of numbers given to `--name`.
        """
        try:
            values = [float(part) for part in text.split(",") if part.strip()]
        except ValueError as err:
            raise exceptions.ConfigError(f"--{name}", f"cannot read `{text}`") from err
        if count is not None and len(values) != count:
            detail = f"expected {count} comma-separated numbers, got {len(values)}"
            raise exceptions.ConfigError(f"--{name}", detail)
        return values

    # -----
    # _format
    # -----
    def _format(self: Self, runConfig: RunConfig) -> str:
        return runConfig.output.format or self.defaultFormat

    # -----
    # _emit
    # -----
    def _emit(self: Self, text: str, runConfig: RunConfig) -> None:
        """
        Writes a report to `--out`, or to stdout when no file is given.
        """
        if runConfig.output.out is None:
            self.line(Formatter.escape(text.rstrip("\n")))
            return
        path = reports.write_text(text, Path(runConfig.output.out))
        self.line(f"Report written to <info>{path}</info>")

    # -----
    # _verdict_tag
    # -----
    def _verdict_tag(self: Self, verdict: Verdict) -> str:
        style = {
            Verdict.GLOBAL: "success",
            Verdict.BREAKDOWN: "error",
            Verdict.MARGINAL: "warning",
        }[verdict]
        return f"<{style}>{verdict.value}</{style}>"
