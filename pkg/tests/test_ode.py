import numpy as np
import pytest

from epcritical.core.model import CharData
from epcritical.core.model import ModelParams
from epcritical.core.ode import EventSpec
from epcritical.core.ode import HorizonPolicy
from epcritical.core.ode import IvpProblem
from epcritical.core.ode import Termination
from epcritical.core.ode import Tolerances
from epcritical.core.ode import integrate
from epcritical.core.ode import solve_characteristic
from epcritical.core.ode import solve_eta
from epcritical.exceptions import exceptions


def _oscillator(_t: float, y: np.ndarray) -> np.ndarray:
    return np.array([y[1], -y[0]])


# ============================================
#             test_riccati_blowup
# ============================================
def test_riccati_blowup() -> None:
    """
    y' = -y^2 from y(0) = -1 blows up at exactly t = 1.
    """
    sol = integrate(
        IvpProblem(lambda _t, y: -(y**2), 0.0, np.array([-1.0]), 2.0)
    )
    assert sol.termination == Termination.BLOWUP
    assert sol.tcEstimate == pytest.approx(1.0, abs=1e-3)
    assert not sol.success


# ============================================
#            test_dense_output
# ============================================
def test_dense_output() -> None:
    """
    The dense output of the harmonic oscillator matches cos and -sin
    between the steps.
    """
    sol = integrate(IvpProblem(_oscillator, 0.0, np.array([1.0, 0.0]), 10.0))
    assert sol.termination == Termination.REACHED_END
    ts = np.linspace(0.0, 10.0, 37)
    ys = sol(ts)
    assert np.max(np.abs(ys[:, 0] - np.cos(ts))) < 1e-8
    assert np.max(np.abs(ys[:, 1] + np.sin(ts))) < 1e-8
    assert sol(np.pi)[0] == pytest.approx(-1.0, abs=1e-8)


# ============================================
#            test_backward_integration
# ============================================
def test_backward_integration() -> None:
    sol = integrate(IvpProblem(_oscillator, 0.0, np.array([1.0, 0.0]), -3.0))
    assert sol.tFinal == pytest.approx(-3.0)
    assert sol.yFinal[0] == pytest.approx(np.cos(3.0), abs=1e-8)


# ============================================
#              test_events
# ============================================
def test_events() -> None:
    """
    Zeros of cos are located to root-finding accuracy and filtered by
    direction; a terminal event stops the integration there.
    """
    both = EventSpec(lambda _t, y: y[0], "zero")
    down = EventSpec(lambda _t, y: y[0], "down", direction=-1)
    sol = integrate(
        IvpProblem(_oscillator, 0.0, np.array([1.0, 0.0]), 7.0, events=[both, down])
    )
    zeros = [ev.time for ev in sol.events_named("zero")]
    assert zeros == pytest.approx([0.5 * np.pi, 1.5 * np.pi], abs=1e-9)
    assert [ev.time for ev in sol.events_named("down")] == pytest.approx(
        [0.5 * np.pi], abs=1e-9
    )

    stop = EventSpec(lambda _t, y: y[0], "stop", terminal=True)
    sol = integrate(
        IvpProblem(_oscillator, 0.0, np.array([1.0, 0.0]), 7.0, events=[stop])
    )
    assert sol.termination == Termination.EVENT_STOP
    assert sol.tFinal == pytest.approx(0.5 * np.pi, abs=1e-9)
    assert sol.first_event("stop") is not None


# ============================================
#            test_fixed_step_order
# ============================================
def test_fixed_step_order() -> None:
    """
    Halving a fixed step shrinks the global error by about 2^5.
    """
    errors = []
    for steps in (20, 40):
        sol = integrate(
            IvpProblem(
                _oscillator, 0.0, np.array([1.0, 0.0]), 2.0, fixedStep=2.0 / steps
            )
        )
        errors.append(abs(sol.yFinal[0] - np.cos(2.0)))
    order = np.log2(errors[0] / errors[1])
    assert order == pytest.approx(5.0, rel=0.1)


# ============================================
#             test_problem_validation
# ============================================
def test_problem_validation() -> None:
    with pytest.raises(exceptions.InvalidParametersError):
        IvpProblem(_oscillator, 0.0, np.array([1.0, 0.0]), 0.0)
    with pytest.raises(exceptions.InvalidStateError):
        IvpProblem(_oscillator, 0.0, np.array([np.nan, 0.0]), 1.0)
    with pytest.raises(exceptions.InvalidParametersError):
        Tolerances(rel=0.0)


# ============================================
#        test_zero_density_tangent_blowup
# ============================================
def test_zero_density_tangent_blowup(bg4: ModelParams) -> None:
    """
    At the equilibrium with no density, p' = -p^2 - kc gives
    p = -tan(t) and breakdown at pi/2.
    """
    char = CharData.build(1.0, 0.0, 0.0, 0.0, 0.0, bg4)
    sol = solve_characteristic(char, bg4, 5.0)
    assert sol.termination == Termination.BLOWUP
    assert sol.tcEstimate == pytest.approx(0.5 * np.pi, abs=1e-3)


# ============================================
#           test_eta_equilibrium
# ============================================
def test_eta_equilibrium(bg4: ModelParams) -> None:
    """
    On the equilibrium orbit eta'' + kc eta = k, so eta0 = 1/c stays put
    and eta0 = 1.5/c oscillates down to 0.5/c.
    """
    still = solve_eta(CharData.build(1.0, 0.0, 0.0, 0.0, 1.0, bg4), bg4, 10.0)
    assert still.termination == Termination.REACHED_END
    assert np.max(np.abs(still.ys[:, 2] - 1.0)) < 1e-10

    moving = solve_eta(CharData.build(1.0, 0.0, 0.0, 0.0, 1.0 / 1.5, bg4), bg4, 10.0)
    _ts, ys = moving.sample(2001)
    assert ys[:, 2].min() == pytest.approx(0.5, abs=1e-5)


# ============================================
#            test_eta_zero_event
# ============================================
def test_eta_zero_event(bg4: ModelParams) -> None:
    """
    eta0 = 3/c on the equilibrium orbit reaches zero where
    1 + 2 cos(t) = 0, i.e. at t = 2 pi / 3.
    """
    sol = solve_eta(CharData.build(1.0, 0.0, 0.0, 0.0, 1.0 / 3.0, bg4), bg4, 10.0)
    hit = sol.first_event("eta_zero")
    assert sol.termination == Termination.EVENT_STOP
    assert hit is not None
    assert hit.time == pytest.approx(2.0 * np.pi / 3.0, abs=1e-8)


# ============================================
#           test_solve_eta_rejects
# ============================================
def test_solve_eta_rejects(bg4: ModelParams) -> None:
    with pytest.raises(exceptions.ZeroDensityError):
        solve_eta(CharData.build(1.0, 0.0, 0.0, 0.0, 0.0, bg4), bg4, 1.0)
    with pytest.raises(exceptions.InvalidStateError):
        solve_eta(CharData.build(1.0, 0.0, -0.3, 0.0, 1.0, bg4), bg4, 1.0)


# ============================================
#             test_horizon_policy
# ============================================
def test_horizon_policy(zeroBg3: ModelParams) -> None:
    policy = HorizonPolicy()
    assert policy.periodic_horizon(2.0) == pytest.approx(4.5)
    assert policy.zero_background_horizon(1.0, 1.0, zeroBg3) == 200.0
    assert policy.zero_background_horizon(0.01, 0.0, zeroBg3) == pytest.approx(5000.0)
    assert policy.zero_background_horizon(0.0, 0.0, zeroBg3) == policy.maxHorizon
