from pathlib import Path
from typing import Any
from typing import Literal
from typing import Self

from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import ValidationError
from pydantic import model_validator

from epcritical.core.model import ModelParams
from epcritical.core.ode import HorizonPolicy
from epcritical.core.ode import Tolerances
from epcritical.core.threshold import MarginPolicy
from epcritical.exceptions import exceptions
from epcritical.verify.sweep import SamplerSpec
import epcritical.utilities.config as cfg


# ============================================
#                 _Section
# ============================================
class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# ============================================
#               ParamsConfig
# ============================================
class ParamsConfig(_Section):
    k: float = Field(1.0, gt=0)
    c: float = Field(1.0, ge=0)
    N: int = Field(4, ge=2)

    # -----
    # to_model
    # -----
    def to_model(self) -> ModelParams:
        return ModelParams(self.k, self.c, self.N)


# ============================================
#              TolerancesConfig
# ============================================
class TolerancesConfig(_Section):
    rel: float = Field(cfg.classifyRelTol, gt=0)
    abs: float = Field(cfg.classifyAbsTol, gt=0)


# ============================================
#               HorizonConfig
# ============================================
class HorizonConfig(_Section):
    cycles: int = Field(cfg.oracleCycles, ge=1)
    cycle_margin: float = Field(cfg.oracleCycleMargin, ge=0)
    min_horizon: float = Field(cfg.zeroBgMinHorizon, gt=0)
    decay_multiple: float = Field(cfg.zeroBgDecayMultiple, gt=0)
    extension_factor: float = Field(cfg.horizonExtensionFactor, gt=1)
    max_horizon: float = Field(cfg.maxHorizon, gt=0)

    # -----
    # to_policy
    # -----
    def to_policy(self) -> HorizonPolicy:
        return HorizonPolicy(
            self.cycles,
            self.cycle_margin,
            self.min_horizon,
            self.decay_multiple,
            self.extension_factor,
            self.max_horizon,
        )


# ============================================
#               SamplerConfig
# ============================================
class SamplerConfig(_Section):
    q0: tuple[float, float] = cfg.samplerQ0
    s0_offset: float = Field(cfg.samplerS0Offset, gt=0)
    s0_max: float = cfg.samplerS0Max
    rho0: tuple[float, float] = cfg.samplerRho0
    p0: tuple[float, float] = cfg.samplerP0
    zero_density_fraction: float = Field(cfg.samplerZeroDensityFraction, ge=0, le=1)
    exclusion_band: float = Field(cfg.exclusionBand, ge=0)

    # -----
    # to_spec
    # -----
    def to_spec(self) -> SamplerSpec:
        return SamplerSpec(
            self.q0,
            self.s0_offset,
            self.s0_max,
            self.rho0,
            self.p0,
            self.zero_density_fraction,
        )


# ============================================
#               OutputConfig
# ============================================
class OutputConfig(_Section):
    out: Path | None = None
    format: Literal["csv", "json"] | None = None


# ============================================
#                 RunConfig
# ============================================
class RunConfig(_Section):
    """
    Everything a command needs to reproduce a run. Loaded from a JSON
    file and then overridden by command-line flags.
    """

    params: ParamsConfig = ParamsConfig()
    tolerances: TolerancesConfig = TolerancesConfig()
    margin: float = Field(cfg.defaultMargin, ge=0)
    horizon: HorizonConfig = HorizonConfig()
    sampler: SamplerConfig = SamplerConfig()
    seed: int = cfg.defaultSeed
    output: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def _check_sampler(self) -> Self:
        if self.params.c == 0 and not self.sampler.s0_max > self.sampler.s0_offset:
            raise ValueError("sampler.s0_max must exceed sampler.s0_offset when c = 0")
        return self

    # -----
    # load
    # -----
    @classmethod
    def load(cls, path: Path | str | None) -> Self:
        """
        Reads a configuration file. None yields the defaults.

        Raises
        ------
        ConfigError
            If the file is unreadable or fails validation, including
            unknown keys.
        """
        if path is None:
            return cls()
        path = Path(path)
        try:
            return cls.model_validate_json(path.read_text(encoding="utf-8"))
        except OSError as err:
            raise exceptions.ConfigError(str(path), err.strerror or str(err)) from err
        except ValidationError as err:
            raise exceptions.ConfigError(str(path), _describe(err)) from err

    # -----
    # with_overrides
    # -----
    def with_overrides(self, overrides: dict[str, Any]) -> Self:
        """
        Applies flag values on top of the file values. `overrides` maps
        dotted paths (`"params.k"`, `"seed"`) to values; None entries
        are skipped.

        Raises
        ------
        ConfigError
            If the merged configuration is invalid.
        """
        data = self.model_dump()
        for dotted, value in overrides.items():
            if value is None:
                continue
            *parents, leaf = dotted.split(".")
            node = data
            for key in parents:
                node = node[key]
            node[leaf] = value
        try:
            return type(self).model_validate(data)
        except ValidationError as err:
            raise exceptions.ConfigError("command-line flags", _describe(err)) from err

    # -----
    # model_params
    # -----
    def model_params(self) -> ModelParams:
        return self.params.to_model()

    # -----
    # tolerance_pair
    # -----
    def tolerance_pair(self) -> Tolerances:
        return Tolerances(self.tolerances.rel, self.tolerances.abs)

    # -----
    # margin_policy
    # -----
    def margin_policy(self, estimateBreakdownTime: bool = True) -> MarginPolicy:
        return MarginPolicy(
            self.margin,
            self.tolerance_pair(),
            self.horizon.to_policy(),
            estimateBreakdownTime,
        )


# -----
# _describe
# -----
def _describe(err: ValidationError) -> str:
    parts = []
    for issue in err.errors():
        location = ".".join(str(p) for p in issue["loc"]) or "<root>"
        parts.append(f"{location}: {issue['msg']}")
    return "; ".join(parts)


# ============================================
#               parse_params
# ============================================
def parse_params(text: str) -> dict[str, Any]:
    """
    Parses `k=1,c=0.5,N=3` into override entries for `RunConfig`.

    Raises
    ------
    ConfigError
        On an unknown key or a value that is not a number.
    """
    overrides: dict[str, Any] = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in ("k", "c", "N"):
            raise exceptions.ConfigError("--params", f"cannot read `{item}`")
        try:
            overrides[f"params.{key}"] = int(value) if key == "N" else float(value)
        except ValueError as err:
            detail = f"`{value}` is not a number"
            raise exceptions.ConfigError("--params", detail) from err
    return overrides
