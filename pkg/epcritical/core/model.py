from dataclasses import dataclass
from dataclasses import field
from enum import Enum
from functools import cached_property
import logging
from typing import Any
from typing import Self

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from epcritical.exceptions import exceptions
import epcritical.utilities.config as cfg

logger = logging.getLogger(__name__)


# ============================================
#                 ModelParams
# ============================================
@dataclass(frozen=True)
class ModelParams:
    """
    Forcing coefficient `k`, background state `c` and dimension `N`.

    Every formula in the package branches on these: `N == 2` against
    `N >= 3` (exact integer match) and `c == 0` against `c > 0`.
    """

    k: float
    c: float
    N: int

    # -----
    # __post_init__
    # -----
    def __post_init__(self) -> None:
        if not np.isfinite(self.k) or self.k <= 0:
            raise exceptions.InvalidParametersError("k", self.k, "k > 0")
        if not np.isfinite(self.c) or self.c < 0:
            raise exceptions.InvalidParametersError("c", self.c, "c >= 0")
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 2:
            raise exceptions.InvalidParametersError("N", self.N, "integer N >= 2")
        object.__setattr__(self, "N", int(self.N))

    @property
    def cOverN(self) -> float:
        return self.c / self.N

    @property
    def isPlanar(self) -> bool:
        return self.N == 2

    @property
    def hasBackground(self) -> bool:
        return self.c > 0


# ============================================
#                RadialProfile
# ============================================
@dataclass(frozen=True, eq=False)
class RadialProfile:
    """
    Sampled initial density and radial velocity.

    Samples are interpolated with a monotone cubic (PCHIP) so that the
    velocity gradient used for `p0` does not pick up spurious wiggles.
    """

    r: NDArray[np.float64]
    rho0: NDArray[np.float64]
    u0: NDArray[np.float64]
    source: str = "<memory>"

    # -----
    # __post_init__
    # -----
    def __post_init__(self) -> None:
        r = np.asarray(self.r, dtype=float)
        rho0 = np.asarray(self.rho0, dtype=float)
        u0 = np.asarray(self.u0, dtype=float)

        sameShape = r.ndim == rho0.ndim == u0.ndim == 1
        if not sameShape or not len(r) == len(rho0) == len(u0):
            raise exceptions.ProfileFormatError(
                self.source, "Columns r, rho0 and u0 must have equal length."
            )
        if len(r) < 2:
            raise exceptions.ProfileFormatError(
                self.source, "At least two samples are required."
            )
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(rho0))):
            raise exceptions.ProfileFormatError(self.source, "Non-finite sample.")
        if not np.all(np.isfinite(u0)):
            raise exceptions.ProfileFormatError(self.source, "Non-finite sample.")
        if r[0] <= 0:
            raise exceptions.ProfileFormatError(self.source, "Radii must be positive.")
        if np.any(np.diff(r) <= 0):
            raise exceptions.ProfileFormatError(
                self.source, "Radii must be strictly increasing."
            )
        if np.any(rho0 < 0):
            raise exceptions.ProfileFormatError(
                self.source, "Density must be nonnegative."
            )

        object.__setattr__(self, "r", r)
        object.__setattr__(self, "rho0", rho0)
        object.__setattr__(self, "u0", u0)

    @property
    def rMin(self) -> float:
        return float(self.r[0])

    @property
    def rMax(self) -> float:
        return float(self.r[-1])

    @cached_property
    def densityInterpolant(self) -> PchipInterpolator:
        return PchipInterpolator(self.r, self.rho0, extrapolate=True)

    @cached_property
    def velocityInterpolant(self) -> PchipInterpolator:
        return PchipInterpolator(self.r, self.u0, extrapolate=True)

    # -----
    # grid
    # -----
    def grid(self, n: int) -> NDArray[np.float64]:
        """
        Evenly spaced radii spanning the sampled range.
        """
        if n < 1:
            raise exceptions.InvalidSweepError("A radius grid needs n >= 1.")
        if n == 1:
            return np.array([0.5 * (self.rMin + self.rMax)])
        return np.linspace(self.rMin, self.rMax, n)


# ============================================
#                  CharData
# ============================================
@dataclass(frozen=True)
class CharData:
    """
    Initial state of one characteristic, labelled by the radius `beta`
    it starts from, together with the derived transformed variables.

    `eta0`, `w0` and `A0` are None for zero-density characteristics.
    Build instances through the `build` family of constructors so the
    derived fields stay consistent.
    """

    beta: float
    q0: float
    s0: float
    p0: float
    rho0: float
    sTilde0: float
    eta0: float | None = None
    w0: float | None = None
    A0: float | None = None

    # -----
    # build
    # -----
    @classmethod
    def build(
        cls,
        beta: float,
        q0: float,
        s0: float,
        p0: float,
        rho0: float,
        params: ModelParams,
    ) -> Self:
        """
        Builds characteristic data from the primitive initial values.

        Parameters
        ----------
        beta : float
            Lagrangian label (starting radius).

        q0, s0, p0 : float
            Initial values of u/r, the averaged mass excess and u_r.

        rho0 : float
            Initial density. Values below `cfg.zeroDensityFloor` are
            snapped to zero.

        params : ModelParams
            Model parameters.

        Raises
        ------
        InvalidStateError
            If a value is not finite or the density is negative.
        """
        for name, value in (("q0", q0), ("s0", s0), ("p0", p0), ("rho0", rho0)):
            if not np.isfinite(value):
                raise exceptions.InvalidStateError(name, value, "finite")
        if rho0 < 0:
            raise exceptions.InvalidStateError("rho0", rho0, "rho0 >= 0")
        if rho0 < cfg.zeroDensityFloor:
            rho0 = 0.0

        sTilde0 = s0 + params.cOverN

        if rho0 == 0.0:
            return cls(float(beta), float(q0), float(s0), float(p0), 0.0, sTilde0)

        eta0 = 1.0 / rho0
        w0 = p0 / rho0
        A0 = (q0 * p0 - params.k * s0) / rho0

        return cls(
            float(beta),
            float(q0),
            float(s0),
            float(p0),
            float(rho0),
            float(sTilde0),
            eta0,
            w0,
            A0,
        )

    # -----
    # from_point
    # -----
    @classmethod
    def from_point(
        cls,
        alpha: float,
        x: float,
        y: float,
        z: float,
        omega: float,
        params: ModelParams,
    ) -> Self:
        """
        Builds data from the threshold coordinates
        (alpha, x, y, z, omega) = (r, u0, phi0r, u0r, rho0).
        """
        if not alpha > 0:
            raise exceptions.InvalidStateError("r", alpha, "r > 0")
        return cls.build(alpha, x / alpha, -y / alpha, z, omega, params)

    # -----
    # from_eta_w
    # -----
    @classmethod
    def from_eta_w(
        cls,
        q0: float,
        s0: float,
        eta0: float,
        w0: float,
        params: ModelParams,
        beta: float = 1.0,
    ) -> Self:
        if not eta0 > 0:
            raise exceptions.InvalidStateError("eta0", eta0, "eta0 > 0")
        return cls.build(beta, q0, s0, w0 / eta0, 1.0 / eta0, params)

    # -----
    # from_a0
    # -----
    @classmethod
    def from_a0(
        cls,
        q0: float,
        s0: float,
        A0: float,
        params: ModelParams,
        eta0: float | None = None,
        w0: float | None = None,
        beta: float = 1.0,
    ) -> Self:
        """
        Builds data on the line of constant `A0`.

        With `q0 != 0` the free coordinate is `eta0` and
        `w0 = (A0 + k eta0 s0) / q0`. With `q0 == 0` the free coordinate
        is `w0` and `eta0 = -A0 / (k s0)`.
        """
        k = params.k
        if q0 != 0:
            if eta0 is None:
                raise exceptions.InvalidStateError("eta0", eta0, "given when q0 != 0")
            w0 = (A0 + k * eta0 * s0) / q0
        else:
            if w0 is None:
                raise exceptions.InvalidStateError("w0", w0, "given when q0 == 0")
            if s0 == 0:
                raise exceptions.InvalidStateError("s0", s0, "s0 != 0 when q0 == 0")
            eta0 = -A0 / (k * s0)
        return cls.from_eta_w(q0, s0, eta0, w0, params, beta)

    @property
    def hasDensity(self) -> bool:
        return self.rho0 > 0

    @property
    def isEquilibrium(self) -> bool:
        return self.q0 == 0 and self.s0 == 0


# ============================================
#          radial_to_characteristic
# ============================================
def radial_to_characteristic(
    profile: RadialProfile, beta: float, params: ModelParams
) -> CharData:
    """
    Maps a radial profile at the radius `beta` onto characteristic data.

    `s0 = beta^-N int_0^beta (rho0(xi) - c) xi^(N-1) dxi` is integrated
    adaptively on the interpolant with breakpoints at the sample radii.
    Below the first sample the interpolant's extrapolation is used.

    Raises
    ------
    ProfileRangeError
        If `beta` is outside the sampled radii.

    QuadratureError
        If the s0 integral misses `cfg.quadratureTol`.
    """
    if not profile.rMin <= beta <= profile.rMax:
        raise exceptions.ProfileRangeError(beta, profile.rMin, profile.rMax)

    N = params.N
    rho = profile.densityInterpolant
    u = profile.velocityInterpolant

    def integrand(xi: float) -> float:
        return float((rho(xi) - params.c) * xi ** (N - 1))

    breaks = [float(r) for r in profile.r if 0 < r < beta]
    limit = max(100, 4 * len(breaks) + 50)
    mass, errEst = quad(
        integrand,
        0.0,
        beta,
        points=breaks or None,
        epsabs=cfg.quadratureTol * beta**N,
        epsrel=0.0,
        limit=limit,
    )
    if errEst > cfg.quadratureTol * beta**N:
        raise exceptions.QuadratureError("s0", errEst / beta**N, cfg.quadratureTol)

    s0 = mass / beta**N
    q0 = float(u(beta)) / beta
    p0 = float(u.derivative()(beta))
    rho0 = max(float(rho(beta)), 0.0)

    data = CharData.build(beta, q0, s0, p0, rho0, params)

    if data.sTilde0 <= -cfg.quadratureTol:
        # The averaged density is nonnegative, so this is a quadrature failure.
        raise exceptions.QuadratureError("s0 + c/N", data.sTilde0, cfg.quadratureTol)

    logger.debug("beta=%r -> q0=%r s0=%r p0=%r rho0=%r", beta, q0, s0, p0, rho0)

    return data


# ============================================
#         characteristics_from_profile
# ============================================
def characteristics_from_profile(
    profile: RadialProfile,
    radii: list[float] | NDArray[np.float64],
    params: ModelParams,
) -> list[CharData]:
    return [radial_to_characteristic(profile, float(b), params) for b in radii]


# ============================================
#                 compute_A0
# ============================================
def compute_A0(data: CharData, params: ModelParams) -> float:
    """
    Returns `A0 = (q0 p0 - k s0) / rho0`.

    Raises
    ------
    ZeroDensityError
        If `rho0 == 0`.
    """
    if not data.hasDensity:
        raise exceptions.ZeroDensityError("compute_A0")
    return (data.q0 * data.p0 - params.k * data.s0) / data.rho0


# ============================================
#                 to_eta_w
# ============================================
def to_eta_w(data: CharData) -> tuple[float, float]:
    """
    Returns `(eta0, w0) = (1/rho0, p0/rho0)`.

    Raises
    ------
    ZeroDensityError
        If `rho0 == 0`.
    """
    if not data.hasDensity:
        raise exceptions.ZeroDensityError("to_eta_w")
    return 1.0 / data.rho0, data.p0 / data.rho0


# ============================================
#                  Verdict
# ============================================
class Verdict(str, Enum):
    GLOBAL = "Global"
    BREAKDOWN = "Breakdown"
    MARGINAL = "Marginal"


# ============================================
#                   Reason
# ============================================
class Reason(str, Enum):
    """
    The rule that decided a classification.
    """

    ZERO_DENSITY = "ZeroDensity"
    QS_BLOWUP = "QSBlowup"
    EQUILIBRIUM = "Equilibrium"
    A_ZERO_SIGN_CONDITION = "AZeroSignCondition"
    KAPPA_OUTSIDE_WINDOW = "KappaOutsideWindow"
    ENVELOPE_VIOLATION = "EnvelopeViolation"
    ENVELOPE_CONTAINMENT = "EnvelopeContainment"
    RHO_ZERO_GLOBAL_BRANCH = "RhoZeroGlobalBranch"
    RHO_ZERO_BREAKDOWN = "RhoZeroBreakdown"
    RICCATI_THRESHOLD = "RiccatiThreshold"
    NONNEGATIVE_A = "NonnegativeA"
    LOWER_ENVELOPE = "LowerEnvelope"
    KAPPA_BEYOND_APEX = "KappaBeyondApex"
    DERIVATIVE_ENVELOPE = "DerivativeEnvelope"
    DIRECT_INTEGRATION = "DirectIntegration"


# ============================================
#               Classification
# ============================================
@dataclass(frozen=True)
class Classification:
    """
    Outcome of a classifier.

    `margin` is the signed relative distance to the inequality that
    decided the verdict: positive on the global side. `evidence` holds
    the intermediate quantities (kappa, Gamma window, envelope values)
    for reports.
    """

    verdict: Verdict
    reason: Reason
    margin: float
    tcEstimate: float | None = None
    evidence: dict[str, Any] = field(default_factory=dict)

    # -----
    # __post_init__
    # -----
    def __post_init__(self) -> None:
        if self.tcEstimate is not None and self.verdict != Verdict.BREAKDOWN:
            raise exceptions.InvalidStateError(
                "tcEstimate", self.tcEstimate, "only set on Breakdown"
            )
