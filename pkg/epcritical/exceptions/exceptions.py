from pathlib import Path
from typing import Any


# ============================================
#           InvalidParametersError
# ============================================
class InvalidParametersError(Exception):
    """
    Raised when model parameters (k, c, N) or a request built from them
    fall outside the supported range.
    """

    # -----
    # constructor
    # -----
    def __init__(self, name: str, value: Any, requirement: str) -> None:
        self._name = name
        self._value = value
        self._requirement = requirement

    # -----
    # __str__
    # -----
    def __str__(self) -> str:
        msg = f"<error>Error: invalid value for `{self._name}`.</error>"
        msg += f"\n\tGiven: <info>{self._value}</info>"
        msg += f"\n\tRequired: <info>{self._requirement}</info>"
        return msg


# ============================================
#             InvalidStateError
# ============================================
class InvalidStateError(Exception):
    """
    Raised when a state quantity is outside the domain of a formula,
    e.g., a nonpositive s_tilde handed to the trajectory invariant.
    """

    # -----
    # constructor
    # -----
    def __init__(self, quantity: str, value: float, requirement: str) -> None:
        self._quantity = quantity
        self._value = value
        self._requirement = requirement

    # -----
    # __str__
    # -----
    def __str__(self) -> str:
        msg = f"<error>Error: `{self._quantity}` is out of domain.</error>"
        msg += f"\n\tValue: <info>{self._value!r}</info>"
        msg += f"\n\tRequired: <info>{self._requirement}</info>"
        return msg


# ============================================
#            ZeroDensityError
# ============================================
class ZeroDensityError(Exception):
    """
    Raised when a quantity that divides by the initial density is
    requested for a zero-density characteristic.
    """

    # -----
    # constructor
    # -----
    def __init__(self, operation: str) -> None:
        self._operation = operation

    # -----
    # __str__
    # -----
    def __str__(self) -> str:
        msg = f"<error>Error: `{self._operation}` is undefined when rho0 = 0.</error>"
        msg += "\n\tRoute the characteristic to the zero-density branch."
        return msg


# ============================================
#             ProfileFormatError
# ============================================
class ProfileFormatError(Exception):
    """
    Raised when a profile file cannot be parsed or violates the sample
    requirements.
    """

    # -----
    # constructor
    # -----
    def __init__(self, source: Path | str, detail: str) -> None:
        self._source = source
        self._detail = detail

    # -----
    # __str__
    # -----
    def __str__(self) -> str:
        msg = "<error>Error: malformed radial profile.</error>"
        msg += f"\n\tSource: <info>{self._source}</info>"
        msg += f"\n\t{self._detail}"
        return msg


# ============================================
#             ProfileRangeError
# ============================================
class ProfileRangeError(Exception):
    """
    Raised when a requested radius lies outside the sampled range.
    """

    # -----
    # constructor
    # -----
    def __init__(self, beta: float, rMin: float, rMax: float) -> None:
        self._beta = beta
        self._rMin = rMin
        self._rMax = rMax

    # -----
    # __str__
    # -----
    def __str__(self) -> str:
        msg = f"<error>Error: radius {self._beta!r} is outside the profile.</error>"
        msg += f"\n\tSampled range: <info>[{self._rMin!r}, {self._rMax!r}]</info>"
        return msg


# ============================================
#              QuadratureError
# ============================================
class QuadratureError(Exception):
    """
    Raised when a quadrature cannot reach its tolerance.
    """

    # -----
    # constructor
    # -----
    def __init__(self, quantity: str, estimate: float, tolerance: float) -> None:
        self._quantity = quantity
        self._estimate = estimate
        self._tolerance = tolerance

    # -----
    # __str__
    # -----
    def __str__(self) -> str:
        msg = f"<error>Error: quadrature for {self._quantity} did not converge.</error>"
        msg += f"\n\tError estimate: <info>{self._estimate:.3e}</info>"
        msg += f"\n\tTolerance: <info>{self._tolerance:.3e}</info>"
        return msg


# ============================================
#           InvalidInvariantError
# ============================================
class InvalidInvariantError(Exception):
    """
    Raised when a trajectory invariant lies below the minimum of the
    q = 0 section, so no real orbit carries it.
    """

    # -----
    # constructor
    # -----
    def __init__(self, invariant: float, minimum: float) -> None:
        self._invariant = invariant
        self._minimum = minimum

    # -----
    # __str__
    # -----
    def __str__(self) -> str:
        msg = "<error>Error: no orbit carries this invariant.</error>"
        msg += f"\n\tInvariant: <info>{self._invariant!r}</info>"
        msg += f"\n\tSmallest attainable value: <info>{self._minimum!r}</info>"
        return msg


# ============================================
#             IntegrationError
# ============================================
class IntegrationError(Exception):
    """
    Raised when a caller needs a complete trajectory but the integrator
    stopped early.
    """

    # -----
    # constructor
    # -----
    def __init__(self, what: str, termination: str, t: float) -> None:
        self._what = what
        self._termination = termination
        self._t = t

    # -----
    # __str__
    # -----
    def __str__(self) -> str:
        msg = f"<error>Error: integration of {self._what} failed.</error>"
        msg += f"\n\tTermination: <info>{self._termination}</info>"
        msg += f"\n\tStopped at t = <info>{self._t!r}</info>"
        return msg


# ============================================
#          InternalConsistencyError
# ============================================
class InternalConsistencyError(Exception):
    """
    Raised when a numerical self-check that must hold by construction
    fails beyond tolerance.
    """

    # -----
    # constructor
    # -----
    def __init__(self, check: str, residual: float, tolerance: float) -> None:
        self._check = check
        self._residual = residual
        self._tolerance = tolerance

    # -----
    # __str__
    # -----
    def __str__(self) -> str:
        msg = f"<error>Error: consistency check failed: {self._check}.</error>"
        msg += f"\n\tResidual: <info>{self._residual:.3e}</info>"
        msg += f"\n\tTolerance: <info>{self._tolerance:.3e}</info>"
        return msg


# ============================================
#           EnvelopeNotFoundError
# ============================================
class EnvelopeNotFoundError(Exception):
    """
    Raised when an envelope is requested for a characteristic whose
    nonlinear quantity never vanishes where it would be pinned.
    """

    # -----
    # constructor
    # -----
    def __init__(self, reason: str) -> None:
        self._reason = reason

    # -----
    # __str__
    # -----
    def __str__(self) -> str:
        msg = "<error>Error: envelope does not exist.</error>"
        msg += f"\n\t{self._reason}"
        return msg


# ============================================
#             InvalidSweepError
# ============================================
class InvalidSweepError(Exception):
    """
    Raised for empty or malformed sweeps and grids.
    """

    # -----
    # constructor
    # -----
    def __init__(self, detail: str) -> None:
        self._detail = detail

    # -----
    # __str__
    # -----
    def __str__(self) -> str:
        return f"<error>Error: invalid sweep.</error>\n\t{self._detail}"


# ============================================
#                ConfigError
# ============================================
class ConfigError(Exception):
    """
    Raised when the run configuration or a command-line flag fails
    validation.
    """

    # -----
    # constructor
    # -----
    def __init__(self, source: str, detail: str) -> None:
        self._source = source
        self._detail = detail

    # -----
    # __str__
    # -----
    def __str__(self) -> str:
        msg = f"<error>Error: invalid configuration in {self._source}.</error>"
        for line in self._detail.splitlines():
            msg += f"\n\t{line}"
        return msg
