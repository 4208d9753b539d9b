import numpy as np
import pytest

from epcritical.core.aquantity import a_of_gamma
from epcritical.core.envelopes import a_zero_times
from epcritical.core.envelopes import build_envelopes
from epcritical.core.envelopes import build_envelopes_zero_bg
from epcritical.core.envelopes import positive_particular_solution
from epcritical.core.model import CharData
from epcritical.core.model import ModelParams
from epcritical.core.qs import QSState
from epcritical.core.qs import integrate_qs
from epcritical.core.qs import orbit_geometry
from epcritical.core.qs import period
from epcritical.exceptions import exceptions


# ============================================
#           test_reference_envelopes
# ============================================
def test_reference_envelopes(bg4: ModelParams, referenceLine: CharData) -> None:
    """
    The reference line has two distinct positive envelopes pinned at
    two A-zeros inside one period.
    """
    pair = build_envelopes(referenceLine, bg4)
    T = period(0.1, 0.15, bg4)

    assert len(pair.tracks) == 2
    assert pair.span == pytest.approx(T)
    assert pair.kappa == pytest.approx(np.sqrt(1.3))
    assert pair.tA2 is not None
    assert 0.0 <= pair.tA1 < T and 0.0 <= pair.tA2 < T
    assert pair.tA1 != pytest.approx(pair.tA2)
    assert pair.eta1At0 > 0 and pair.eta2At0 > 0
    assert pair.eta1At0 != pytest.approx(pair.eta2At0)
    assert set(pair.to_record()) == {"eta1_0", "eta2_0", "deta1_0", "deta2_0"}


# ============================================
#           test_envelope_structure
# ============================================
def test_envelope_structure(bg4: ModelParams, referenceLine: CharData) -> None:
    """
    Each envelope is T-periodic, vanishes at its pinning time and equals
    -A/(k s) where q vanishes.
    """
    pair = build_envelopes(referenceLine, bg4)
    T = pair.span
    for track in pair.tracks:
        assert track.eta(np.array([track.tA]))[0] == pytest.approx(0.0, abs=1e-8)
        ends = track.eta(np.array([0.0, T]))
        assert ends[0] == pytest.approx(ends[1], abs=1e-6)

        for tq in pair.qZeroTimes:
            q, sTilde, eta, _w = track.solution(tq)
            s = sTilde - bg4.cOverN
            gamma = (sTilde / 0.15) ** (1.0 / bg4.N)
            A = a_of_gamma(gamma, 0.15, bg4)
            assert abs(q) < 1e-8
            assert eta == pytest.approx(-A / (bg4.k * s), abs=1e-7)


# ============================================
#          test_envelopes_cached
# ============================================
def test_envelopes_cached(bg4: ModelParams) -> None:
    """
    Envelopes are keyed by value, so equal data shares one computation.
    """
    first = build_envelopes(CharData.from_a0(0.1, -0.1, 0.15, bg4, eta0=1.0), bg4)
    second = build_envelopes(CharData.from_a0(0.1, -0.1, 0.15, bg4, eta0=1.0), bg4)
    assert first is second


# ============================================
#             test_a_zero_times
# ============================================
def test_a_zero_times(bg4: ModelParams, referenceLine: CharData) -> None:
    """
    The reference line has two A-zeros per period. Gamma equals kappa at
    both of them and q does not vanish there.
    """
    geom = orbit_geometry(0.1, 0.15, bg4)
    times = a_zero_times(referenceLine, geom, bg4)
    traj = integrate_qs(QSState(0.1, 0.15), geom.period, bg4)
    pair = build_envelopes(referenceLine, bg4)

    assert len(times) == 2
    assert all(0.0 <= tA < geom.period for tA in times)
    assert sorted(times) == pytest.approx(sorted([pair.tA1, pair.tA2]), abs=1e-8)
    for tA in times:
        q, sTilde = traj.solution(tA)[:2]
        assert (sTilde / 0.15) ** 0.25 == pytest.approx(np.sqrt(1.3), abs=1e-8)
        assert abs(q) > 1e-3

    outside = CharData.from_a0(0.1, -0.1, 1.0, bg4, eta0=1.0)
    assert a_zero_times(outside, geom, bg4) == ()
    with pytest.raises(exceptions.ZeroDensityError):
        a_zero_times(CharData.build(1.0, 0.1, -0.1, 0.0, 0.0, bg4), geom, bg4)


# ============================================
#          test_envelopes_missing
# ============================================
def test_envelopes_missing(bg4: ModelParams, zeroBg3: ModelParams) -> None:
    outside = CharData.from_a0(0.1, -0.1, 1.0, bg4, eta0=1.0)
    with pytest.raises(exceptions.EnvelopeNotFoundError):
        build_envelopes(outside, bg4)
    with pytest.raises(exceptions.ZeroDensityError):
        build_envelopes(CharData.build(1.0, 0.1, -0.1, 0.0, 0.0, bg4), bg4)
    with pytest.raises(exceptions.InvalidParametersError):
        build_envelopes(CharData.from_a0(1.0, 1.0, -0.5, zeroBg3, eta0=1.0), zeroBg3)


# ============================================
#        test_zero_background_envelope
# ============================================
def test_zero_background_envelope(zeroBg3: ModelParams) -> None:
    """
    q0 > 0 with -k/(N-2) < A0 < 0 has a single positive envelope.
    """
    char = CharData.from_a0(1.0, 1.0, -0.5, zeroBg3, eta0=1.0)
    pair = build_envelopes_zero_bg(char, zeroBg3)
    assert len(pair.tracks) == 1
    assert pair.tA2 is None and pair.eta2At0 is None
    assert pair.tA1 > 0
    assert pair.eta1At0 > 0


# ============================================
#     test_zero_background_two_envelopes
# ============================================
def test_zero_background_two_envelopes(zeroBg3: ModelParams) -> None:
    """
    q0 < 0 with a small positive A0: Gamma rises past kappa to the apex
    and falls back, giving two envelopes.
    """
    char = CharData.from_a0(-1.0, 1.0, 0.2, zeroBg3, eta0=1.0)
    pair = build_envelopes_zero_bg(char, zeroBg3)
    assert len(pair.tracks) == 2
    assert pair.tA2 is not None and pair.tA1 < pair.tA2
    assert pair.eta1At0 > 0 and pair.eta2At0 > 0


# ============================================
#       test_positive_particular_solution
# ============================================
@pytest.mark.parametrize("c", [1.0, 0.0])
def test_positive_particular_solution(c: float) -> None:
    """
    g solves eta'' + k eta (c + (N-1) s) = k Gamma^(N-1) and stays
    positive.
    """
    params = ModelParams(1.0, c, 4)
    sTilde0 = 0.15 if c else 1.0
    traj = integrate_qs(QSState(0.1, sTilde0), 8.0, params)
    ts = np.linspace(0.0, 8.0, 801)
    g, aValue = positive_particular_solution(traj, ts)

    assert np.all(g > 0)
    s0 = sTilde0 - params.cOverN
    assert aValue == pytest.approx((0.01 - s0) / (4 * sTilde0))

    h = ts[1] - ts[0]
    gpp = (g[2:] - 2 * g[1:-1] + g[:-2]) / h**2
    _q, sTilde = traj.states(ts[1:-1])
    s = sTilde - params.cOverN
    gamma = traj.gamma(ts[1:-1])
    residual = gpp + g[1:-1] * (c + 3 * s) - gamma**3
    assert np.max(np.abs(residual)) < 1e-3
