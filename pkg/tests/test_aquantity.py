import numpy as np
import pytest

from epcritical.core.aquantity import AQuantity
from epcritical.core.aquantity import a_of_gamma
from epcritical.core.aquantity import a_supremum_zero_bg
from epcritical.core.aquantity import a_window
from epcritical.core.aquantity import kappa
from epcritical.core.model import ModelParams
from epcritical.core.ode import IvpProblem
from epcritical.core.ode import integrate
from epcritical.core.qs import QSState
from epcritical.core.qs import s_max_zero_bg
from epcritical.core.qs import trajectory_invariant


# ============================================
#             test_a_at_start
# ============================================
@pytest.mark.parametrize("N", [2, 3, 4, 7])
def test_a_at_start(N: int) -> None:
    params = ModelParams(1.3, 1.0, N)
    assert a_of_gamma(1.0, 0.4, params) == pytest.approx(0.4)


# ============================================
#              test_kappa_root
# ============================================
@pytest.mark.parametrize("N, A0", [(2, -0.7), (2, 0.3), (3, -0.4), (4, 0.15), (6, 2.0)])
def test_kappa_root(N: int, A0: float) -> None:
    """
    kappa is the positive zero of A(Gamma).
    """
    params = ModelParams(1.0, 1.0, N)
    kap = kappa(A0, params)
    assert kap is not None and kap > 0
    assert a_of_gamma(kap, A0, params) == pytest.approx(0.0, abs=1e-12)


# ============================================
#            test_kappa_values
# ============================================
def test_kappa_values(bg4: ModelParams) -> None:
    assert kappa(0.0, bg4) == pytest.approx(1.0)
    assert kappa(0.15, bg4) == pytest.approx(np.sqrt(1.3))
    assert kappa(-0.5, bg4) is None
    assert kappa(-1.0, bg4) is None
    assert kappa(0.5, ModelParams(2.0, 1.0, 2)) == pytest.approx(np.exp(0.25))
    assert AQuantity.of(-0.5, bg4).kappa is None


# ============================================
#        test_closed_form_matches_ode
# ============================================
def test_closed_form_matches_ode(bg4: ModelParams) -> None:
    """
    Integrating A' = -q A + k q Gamma^(N-1) next to (q, s~) reproduces
    the closed form.
    """
    k, N = bg4.k, bg4.N
    sTilde0, A0 = 0.15, 0.15

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        q, sT, A = y
        gamma = (sT / sTilde0) ** (1.0 / N)
        return np.array(
            [k * sT - k * bg4.cOverN - q * q, -N * q * sT, -q * A + k * q * gamma**3]
        )

    sol = integrate(IvpProblem(rhs, 0.0, np.array([0.1, sTilde0, A0]), 12.0))
    ts = np.linspace(0.0, 12.0, 200)
    ys = sol(ts)
    gamma = (ys[:, 1] / sTilde0) ** (1.0 / N)
    assert np.max(np.abs(ys[:, 2] - a_of_gamma(gamma, A0, bg4))) < 1e-7


# ============================================
#              test_a_window
# ============================================
def test_a_window(bg4: ModelParams) -> None:
    """
    A0 = 0 (kappa = 1) is always inside the window of a nondegenerate
    orbit; the equilibrium orbit has an empty window.
    """
    lo, hi = a_window(0.1, -0.1, bg4)
    assert lo < 0.0 < 0.15 < hi
    assert kappa(hi, bg4) > kappa(lo, bg4)

    lo, hi = a_window(0.0, 0.0, bg4)
    assert lo == hi == pytest.approx(0.0)


# ============================================
#       test_a_supremum_zero_background
# ============================================
def test_a_supremum_zero_background(zeroBg3: ModelParams) -> None:
    """
    At the supremum kappa equals the apex value of Gamma.
    """
    supremum = a_supremum_zero_bg(-1.0, 1.0, zeroBg3)
    sMax = s_max_zero_bg(trajectory_invariant(QSState(-1.0, 1.0), zeroBg3), zeroBg3)
    assert supremum > 0
    assert kappa(supremum, zeroBg3) == pytest.approx(sMax ** (1.0 / 3.0))
