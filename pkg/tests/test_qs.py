import numpy as np
import pytest

from epcritical.core import qs
from epcritical.core.model import ModelParams
from epcritical.core.qs import QSState
from epcritical.core.qs import decay_exponents
from epcritical.core.qs import gamma_of_s
from epcritical.core.qs import integrate_qs
from epcritical.core.qs import orbit_geometry
from epcritical.core.qs import period
from epcritical.core.qs import q_squared_on_orbit
from epcritical.core.qs import qs_blowup_check
from epcritical.core.qs import s_extrema
from epcritical.core.qs import s_max_zero_bg
from epcritical.core.qs import trajectory_invariant
from epcritical.exceptions import exceptions

# s_tilde0 of the reference orbit q0 = 0.1, s0 = -0.1 with c/N = 0.25
_sTilde0 = 0.15


# ============================================
#            test_invariant_values
# ============================================
def test_invariant_values(bg4: ModelParams) -> None:
    """
    The minimum over the q = 0 axis sits at the equilibrium, where it is
    k sqrt(c) for N = 4 and k (1 - ln 2) for N = 2 with c = 1.
    """
    assert trajectory_invariant(QSState(0.0, 0.25), bg4) == pytest.approx(1.0)
    R = trajectory_invariant(QSState(0.1, _sTilde0), bg4)
    assert R == pytest.approx(0.41 / np.sqrt(0.15))

    planar = ModelParams(1.0, 1.0, 2)
    R2 = trajectory_invariant(QSState(0.0, 0.5), planar)
    assert R2 == pytest.approx(1.0 - np.log(2.0))

    with pytest.raises(exceptions.InvalidStateError):
        trajectory_invariant(QSState(0.1, 0.0), bg4)


# ============================================
#           test_invariant_conserved
# ============================================
@pytest.mark.parametrize("N", [2, 3, 4, 6])
def test_invariant_conserved(N: int) -> None:
    params = ModelParams(1.0, 1.0, N)
    sTilde0 = 0.6 * params.cOverN
    T = period(0.2, sTilde0, params)
    traj = integrate_qs(QSState(0.2, sTilde0), 3.0 * T, params)
    ts = np.linspace(0.0, 3.0 * T, 500)
    assert np.max(np.abs(traj.invariant_drift(ts))) < 1e-8
    assert traj.orientation_violations(ts) == 0


# ============================================
#            test_gamma_identity
# ============================================
def test_gamma_identity(bg4: ModelParams) -> None:
    """
    exp(-int q) equals (s~/s~0)^(1/N) along the orbit, and q has zero
    mean over a period.
    """
    T = period(0.1, _sTilde0, bg4)
    traj = integrate_qs(QSState(0.1, _sTilde0), 1.5 * T, bg4)
    ts = np.linspace(0.0, 1.5 * T, 300)
    gap = np.exp(-traj.integral_of_q(ts)) - traj.gamma(ts)
    assert np.max(np.abs(gap)) < 1e-7
    assert abs(traj.integral_of_q(np.array([T]))[0]) < 1e-7


# ============================================
#          test_extrema_closed_form
# ============================================
def test_extrema_closed_form(bg4: ModelParams) -> None:
    """
    For N = 4 the extrema solve a quadratic in sqrt(s~).
    """
    R = trajectory_invariant(QSState(0.1, _sTilde0), bg4)
    root = np.sqrt(R * R - 1.0)
    sMin, sMax = s_extrema(R, bg4)
    assert sMin == pytest.approx(((R - root) / 2.0) ** 2, rel=1e-10)
    assert sMax == pytest.approx(((R + root) / 2.0) ** 2, rel=1e-10)
    assert sMin < _sTilde0 < sMax


# ============================================
#        test_extrema_on_q_zero_axis
# ============================================
@pytest.mark.parametrize("N", [2, 3, 5])
def test_extrema_on_q_zero_axis(N: int) -> None:
    params = ModelParams(1.5, 2.0, N)
    R = trajectory_invariant(QSState(0.7, 0.3), params)
    sMin, sMax = s_extrema(R, params)
    assert sMin < params.cOverN < sMax
    assert q_squared_on_orbit(sMin, R, params) == pytest.approx(0.0, abs=1e-9)
    assert q_squared_on_orbit(sMax, R, params) == pytest.approx(0.0, abs=1e-9)


# ============================================
#            test_extrema_rejects
# ============================================
def test_extrema_rejects(bg4: ModelParams, zeroBg3: ModelParams) -> None:
    with pytest.raises(exceptions.InvalidInvariantError):
        s_extrema(0.5, bg4)
    with pytest.raises(exceptions.InvalidParametersError):
        s_extrema(1.0, zeroBg3)
    assert s_extrema(1.0, bg4) == (0.25, 0.25)


# ============================================
#           test_period_vs_events
# ============================================
def test_period_vs_events(bg4: ModelParams) -> None:
    """
    Every other zero of q is one period apart.
    """
    T = period(0.1, _sTilde0, bg4)
    traj = integrate_qs(QSState(0.1, _sTilde0), 2.5 * T, bg4)
    zeros = traj.qZeroTimes
    assert len(zeros) >= 4
    assert zeros[2] - zeros[0] == pytest.approx(T, abs=1e-7)
    assert zeros[3] - zeros[1] == pytest.approx(T, abs=1e-7)


# ============================================
#          test_period_random_orbits
# ============================================
@pytest.mark.parametrize("N", [2, 3, 4, 6])
def test_period_random_orbits(N: int) -> None:
    """
    Large and near-boundary orbits, including ones whose s_tilde comes
    close to zero, all get a period that matches the q-zero spacing.
    """
    params = ModelParams(1.0, 1.0, N)
    rng = np.random.default_rng(100 + N)
    # N = 2 apexes grow like exp(R): keep s~0 >= 0.2
    sFloor = -0.3 if N == 2 else -0.9 / N
    starts = [(0.0872, 0.906)] if N == 2 else []
    starts += [
        (rng.uniform(-1.0, 1.0), rng.uniform(sFloor, 1.0)) for _ in range(10)
    ]
    starts += [(0.95, 0.99 * sFloor), (-0.95, 1.0)]

    for q0, s0 in starts:
        sTilde0 = s0 + params.cOverN
        T = period(q0, sTilde0, params)
        traj = integrate_qs(QSState(q0, sTilde0), 2.5 * T, params)
        zeros = traj.qZeroTimes
        assert len(zeros) >= 3, (q0, s0)
        assert zeros[2] - zeros[0] == pytest.approx(T, rel=1e-6), (q0, s0)


# ============================================
#          test_period_event_fallback
# ============================================
def test_period_event_fallback(
    bg4: ModelParams, monkeypatch: pytest.MonkeyPatch
) -> None:
    """
    A quadrature that misses its tolerance hands over to the q-zero
    events instead of failing.
    """
    expected = period(0.1, _sTilde0, bg4)
    monkeypatch.setattr(qs, "_period_quadrature", lambda *_args: (np.nan, np.inf))

    assert period(0.1, _sTilde0, bg4) == pytest.approx(expected, rel=1e-7)


# ============================================
#            test_linear_period
# ============================================
def test_linear_period(bg4: ModelParams) -> None:
    """
    The equilibrium returns the linearized period and small orbits
    approach it.
    """
    linear = 2.0 * np.pi
    assert period(0.0, 0.25, bg4) == pytest.approx(linear)
    assert period(1e-4, 0.25, bg4) == pytest.approx(linear, rel=1e-4)
    with pytest.raises(exceptions.InvalidParametersError):
        period(0.1, 1.0, ModelParams(1.0, 0.0, 3))


# ============================================
#            test_orbit_geometry
# ============================================
def test_orbit_geometry(bg4: ModelParams) -> None:
    geom = orbit_geometry(0.1, _sTilde0, bg4)
    assert not geom.degenerate
    assert geom.gammaMin < 1.0 < geom.gammaMax
    assert geom.gammaMax == pytest.approx(gamma_of_s(geom.sTildeMax, _sTilde0, 4))

    still = orbit_geometry(0.0, 0.25, bg4)
    assert still.degenerate
    assert still.gammaMin == still.gammaMax == 1.0


# ============================================
#            test_qs_blowup_check
# ============================================
def test_qs_blowup_check(bg4: ModelParams) -> None:
    assert qs_blowup_check(-0.25, bg4)
    assert qs_blowup_check(-1.0, bg4)
    assert not qs_blowup_check(-0.2, bg4)


# ============================================
#            test_gamma_of_s
# ============================================
def test_gamma_of_s() -> None:
    assert gamma_of_s(0.16, 0.01, 4) == pytest.approx(2.0)
    with pytest.raises(exceptions.InvalidStateError):
        gamma_of_s(0.0, 0.1, 4)


# ============================================
#          test_apex_zero_background
# ============================================
def test_apex_zero_background(zeroBg3: ModelParams) -> None:
    """
    From q0 = -1, s0 = 1 (N = 3, R = 3) q vanishes at s = 3.375.
    """
    R = trajectory_invariant(QSState(-1.0, 1.0), zeroBg3)
    assert R == pytest.approx(3.0)
    assert s_max_zero_bg(R, zeroBg3) == pytest.approx(3.375)
    assert s_max_zero_bg(1.0, ModelParams(1.0, 0.0, 2)) == pytest.approx(np.e)
    with pytest.raises(exceptions.InvalidInvariantError):
        s_max_zero_bg(0.0, zeroBg3)


# ============================================
#             test_decay_rates
# ============================================
def test_decay_rates(zeroBg3: ModelParams) -> None:
    """
    Without background q decays like 1/t and s like t^-N.
    """
    traj = integrate_qs(QSState(1.0, 1.0), 200.0, zeroBg3)
    qSlope, sSlope = decay_exponents(traj, (50.0, 200.0))
    assert qSlope == pytest.approx(-1.0, rel=0.1)
    assert sSlope == pytest.approx(-3.0, rel=0.1)


# ============================================
#               test_rows
# ============================================
def test_rows(bg4: ModelParams) -> None:
    traj = integrate_qs(QSState(0.1, _sTilde0), 5.0, bg4)
    rows = traj.rows(11)
    assert len(rows) == 11
    t, q, s, sTilde, gamma, drift = rows[0]
    assert (t, q, sTilde, gamma) == pytest.approx((0.0, 0.1, _sTilde0, 1.0))
    assert s == pytest.approx(-0.1)
    assert drift == pytest.approx(0.0, abs=1e-12)
    assert rows[-1][0] == pytest.approx(5.0)
