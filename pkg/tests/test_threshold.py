import numpy as np
import pytest

from epcritical.core import threshold
from epcritical.core.envelopes import build_envelopes
from epcritical.core.envelopes import build_envelopes_zero_bg
from epcritical.core.model import CharData
from epcritical.core.model import ModelParams
from epcritical.core.model import Reason
from epcritical.core.model import Verdict
from epcritical.core.threshold import MarginPolicy
from epcritical.core.threshold import classify
from epcritical.core.threshold import classify_positive_background
from epcritical.core.threshold import classify_zero_background
from epcritical.core.threshold import estimate_breakdown_time
from epcritical.exceptions import exceptions
from epcritical.verify.oracle import OracleKind
from epcritical.verify.oracle import oracle_outcome


# ============================================
#          test_zero_density_breaks
# ============================================
def test_zero_density_breaks(bg4: ModelParams) -> None:
    """
    With background, a characteristic without density always breaks
    down, here at pi/2.
    """
    result = classify(CharData.build(1.0, 0.0, 0.0, 0.0, 0.0, bg4), bg4)
    assert result.verdict == Verdict.BREAKDOWN
    assert result.reason == Reason.ZERO_DENSITY
    assert result.tcEstimate == pytest.approx(0.5 * np.pi, abs=1e-3)


# ============================================
#            test_qs_blowup_breaks
# ============================================
def test_qs_blowup_breaks(bg4: ModelParams, quickPolicy: MarginPolicy) -> None:
    char = CharData.build(1.0, 0.5, -0.25, 0.0, 1.0, bg4)
    result = classify(char, bg4, quickPolicy)
    assert result.verdict == Verdict.BREAKDOWN
    assert result.reason == Reason.QS_BLOWUP
    assert result.tcEstimate is None


# ============================================
#             test_equilibrium
# ============================================
@pytest.mark.parametrize(
    "rho0, p0, verdict",
    [
        (1.0, 0.0, Verdict.GLOBAL),
        (1.0 / 1.5, 0.0, Verdict.GLOBAL),
        (1.0 / 3.0, 0.0, Verdict.BREAKDOWN),
        (1.0, 0.5, Verdict.GLOBAL),
        (1.0, 1.5, Verdict.BREAKDOWN),
    ],
)
def test_equilibrium(
    bg4: ModelParams,
    quickPolicy: MarginPolicy,
    rho0: float,
    p0: float,
    verdict: Verdict,
) -> None:
    """
    On the equilibrium orbit eta stays positive iff (eta0, w0) lies
    inside the circle of radius 1/c around (1/c, 0) in the (eta, w/sqrt(kc))
    plane.
    """
    result = classify(CharData.build(1.0, 0.0, 0.0, p0, rho0, bg4), bg4, quickPolicy)
    assert result.reason == Reason.EQUILIBRIUM
    assert result.verdict == verdict


# ============================================
#           test_threshold_sharpness
# ============================================
def test_threshold_sharpness(
    bg4: ModelParams, referenceLine: CharData, quickPolicy: MarginPolicy
) -> None:
    """
    On the reference line eta0 strictly between the envelopes is global;
    just outside either envelope breaks down.
    """
    pair = build_envelopes(referenceLine, bg4)
    lo, hi = sorted((pair.eta1At0, pair.eta2At0))

    def verdict(eta0: float) -> Verdict:
        char = CharData.from_a0(0.1, -0.1, 0.15, bg4, eta0=eta0)
        return classify(char, bg4, quickPolicy).verdict

    assert verdict(0.5 * (lo + hi)) == Verdict.GLOBAL
    assert verdict(1.05 * hi) == Verdict.BREAKDOWN
    assert verdict(0.95 * lo) == Verdict.BREAKDOWN


# ============================================
#             test_evidence
# ============================================
def test_evidence(bg4: ModelParams, referenceLine: CharData) -> None:
    result = classify_positive_background(referenceLine, bg4)
    evidence = result.evidence
    assert evidence["kappa"] == pytest.approx(np.sqrt(1.3))
    low, high = evidence["gamma_window"]
    assert low < evidence["kappa"] < high
    assert set(evidence["envelopes"]) == {"eta1_0", "eta2_0", "deta1_0", "deta2_0"}


# ============================================
#           test_kappa_outside_window
# ============================================
@pytest.mark.parametrize(
    "A0, reason",
    [(1.0, Reason.KAPPA_OUTSIDE_WINDOW), (-0.5, Reason.A_ZERO_SIGN_CONDITION)],
)
def test_kappa_outside_window(
    bg4: ModelParams, quickPolicy: MarginPolicy, A0: float, reason: Reason
) -> None:
    char = CharData.from_a0(0.1, -0.1, A0, bg4, eta0=1.0)
    result = classify(char, bg4, quickPolicy)
    assert result.verdict == Verdict.BREAKDOWN
    assert result.reason == reason
    assert result.margin < 0


# ============================================
#           test_margin_band
# ============================================
def test_margin_band(zeroBg3: ModelParams) -> None:
    """
    The rho0 = 0 bound p0 >= k s0 / q0 is closed: equality is global,
    and just below it falls in the Marginal band.
    """
    policy = MarginPolicy(estimateBreakdownTime=False)
    on = classify(CharData.build(1.0, 1.0, 1.0, 1.0, 0.0, zeroBg3), zeroBg3, policy)
    assert on.verdict == Verdict.GLOBAL
    assert on.reason == Reason.RHO_ZERO_GLOBAL_BRANCH

    below = CharData.build(1.0, 1.0, 1.0, 1.0 - 1e-9, 0.0, zeroBg3)
    assert classify(below, zeroBg3, policy).verdict == Verdict.MARGINAL

    far = CharData.build(1.0, 1.0, 1.0, 0.5, 0.0, zeroBg3)
    assert classify(far, zeroBg3, policy).verdict == Verdict.BREAKDOWN

    strict = MarginPolicy(margin=0.0, estimateBreakdownTime=False)
    assert classify(below, zeroBg3, strict).verdict == Verdict.BREAKDOWN


# ============================================
#       test_zero_background_decision_tree
# ============================================
@pytest.mark.parametrize(
    "q0, s0, p0, rho0, verdict, reason",
    [
        (-1.0, 1.0, 5.0, 0.0, Verdict.BREAKDOWN, Reason.RHO_ZERO_BREAKDOWN),
        (1.0, 1.0, 2.0, 0.0, Verdict.GLOBAL, Reason.RHO_ZERO_GLOBAL_BRANCH),
        (1.0, 1.0, -1.0, 1.0, Verdict.BREAKDOWN, Reason.RICCATI_THRESHOLD),
        (1.0, 1.0, 0.0, 1.0, Verdict.BREAKDOWN, Reason.RICCATI_THRESHOLD),
        (1.0, 1.0, 2.0, 1.0, Verdict.GLOBAL, Reason.NONNEGATIVE_A),
        (-1.0, 1.0, -2.0, 1.0, Verdict.BREAKDOWN, Reason.KAPPA_BEYOND_APEX),
    ],
)
def test_zero_background_decision_tree(
    zeroBg3: ModelParams,
    quickPolicy: MarginPolicy,
    q0: float,
    s0: float,
    p0: float,
    rho0: float,
    verdict: Verdict,
    reason: Reason,
) -> None:
    char = CharData.build(1.0, q0, s0, p0, rho0, zeroBg3)
    result = classify(char, zeroBg3, quickPolicy)
    assert result.verdict == verdict
    assert result.reason == reason


# ============================================
#       test_zero_background_lower_envelope
# ============================================
def test_zero_background_lower_envelope(
    zeroBg3: ModelParams, quickPolicy: MarginPolicy
) -> None:
    """
    q0 > 0 and -k/(N-2) < A0 < 0: global exactly above the envelope.
    """
    line = CharData.from_a0(1.0, 1.0, -0.5, zeroBg3, eta0=1.0)
    eta1 = build_envelopes_zero_bg(line, zeroBg3).eta1At0

    above = CharData.from_a0(1.0, 1.0, -0.5, zeroBg3, eta0=1.05 * eta1)
    below = CharData.from_a0(1.0, 1.0, -0.5, zeroBg3, eta0=0.95 * eta1)
    resultAbove = classify(above, zeroBg3, quickPolicy)
    assert resultAbove.verdict == Verdict.GLOBAL
    assert resultAbove.reason == Reason.LOWER_ENVELOPE
    assert classify(below, zeroBg3, quickPolicy).verdict == Verdict.BREAKDOWN


# ============================================
#        test_classifier_preconditions
# ============================================
def test_classifier_preconditions(bg4: ModelParams, zeroBg3: ModelParams) -> None:
    char = CharData.build(1.0, 0.0, 0.5, 0.0, 1.0, zeroBg3)
    with pytest.raises(exceptions.InvalidParametersError):
        classify_positive_background(char, zeroBg3)
    with pytest.raises(exceptions.InvalidParametersError):
        classify_zero_background(char, bg4)
    with pytest.raises(exceptions.InvalidStateError):
        classify(CharData.build(1.0, 0.0, 0.0, 0.0, 1.0, zeroBg3), zeroBg3)
    with pytest.raises(exceptions.InvalidParametersError):
        MarginPolicy(margin=-1.0)


# ============================================
#          test_estimate_breakdown_time
# ============================================
def test_estimate_breakdown_time(bg4: ModelParams) -> None:
    """
    eta0 = 3/c on the equilibrium orbit first vanishes at 2 pi / 3.
    """
    char = CharData.build(1.0, 0.0, 0.0, 0.0, 1.0 / 3.0, bg4)
    assert estimate_breakdown_time(char, bg4) == pytest.approx(2 * np.pi / 3, abs=1e-8)
    still = CharData.build(1.0, 0.0, 0.0, 0.0, 1.0, bg4)
    assert estimate_breakdown_time(still, bg4) is None


# ============================================
#          test_zero_a_reference_line
# ============================================
@pytest.mark.parametrize("N", [2, 3, 4])
def test_zero_a_reference_line(N: int, quickPolicy: MarginPolicy) -> None:
    """
    A0 = 0 on the q0 = 0.1, s0 = -0.1 line gives a verdict for every N.
    """
    params = ModelParams(1.0, 1.0, N)
    char = CharData.from_a0(0.1, -0.1, 0.0, params, eta0=1.0)
    result = classify(char, params, quickPolicy)

    assert result.verdict in (Verdict.GLOBAL, Verdict.BREAKDOWN, Verdict.MARGINAL)
    assert np.isfinite(result.margin)


# ============================================
#          test_direct_integration_fallback
# ============================================
@pytest.mark.parametrize("factor", [0.5, 1.05, 0.95])
def test_direct_integration_fallback(
    bg4: ModelParams,
    referenceLine: CharData,
    quickPolicy: MarginPolicy,
    monkeypatch: pytest.MonkeyPatch,
    factor: float,
) -> None:
    """
    When the envelopes cannot be built, eta is integrated directly and
    the verdict matches the envelope decision away from the threshold.
    """
    pair = build_envelopes(referenceLine, bg4)
    lo, hi = sorted((pair.eta1At0, pair.eta2At0))
    eta0 = {0.5: 0.5 * (lo + hi), 1.05: 1.05 * hi, 0.95: 0.95 * lo}[factor]
    char = CharData.from_a0(0.1, -0.1, 0.15, bg4, eta0=eta0)
    expected = classify(char, bg4, quickPolicy)

    def failing(*_args: object, **_kwargs: object) -> None:
        raise exceptions.InternalConsistencyError("envelope positivity", 1.0, 0.0)

    monkeypatch.setattr(threshold, "build_envelopes", failing)
    result = classify(char, bg4, quickPolicy)

    assert result.reason == Reason.DIRECT_INTEGRATION
    assert result.verdict == expected.verdict
    assert result.evidence["envelope_error"] == "InternalConsistencyError"
    if result.verdict == Verdict.BREAKDOWN:
        assert result.margin < 0
    else:
        assert result.margin > 0


# ============================================
#     test_zero_background_direct_fallback
# ============================================
@pytest.mark.parametrize(
    "factor, verdict", [(1.5, Verdict.GLOBAL), (0.5, Verdict.BREAKDOWN)]
)
def test_zero_background_direct_fallback(
    zeroBg3: ModelParams,
    quickPolicy: MarginPolicy,
    monkeypatch: pytest.MonkeyPatch,
    factor: float,
    verdict: Verdict,
) -> None:
    line = CharData.from_a0(1.0, 1.0, -0.5, zeroBg3, eta0=1.0)
    eta1 = build_envelopes_zero_bg(line, zeroBg3).eta1At0
    char = CharData.from_a0(1.0, 1.0, -0.5, zeroBg3, eta0=factor * eta1)

    def failing(*_args: object, **_kwargs: object) -> None:
        raise exceptions.EnvelopeNotFoundError("pinned envelope")

    monkeypatch.setattr(threshold, "build_envelopes_zero_bg", failing)
    result = classify(char, zeroBg3, quickPolicy)

    assert result.reason == Reason.DIRECT_INTEGRATION
    assert result.verdict == verdict


# ============================================
#        test_classify_random_sample
# ============================================
@pytest.mark.slow
@pytest.mark.parametrize("N", [2, 3, 4, 6])
@pytest.mark.parametrize("c", [1.0, 0.0])
def test_classify_random_sample(N: int, c: float, quickPolicy: MarginPolicy) -> None:
    """
    Random admissible data always gets a verdict, and outside the margin
    band that verdict matches direct integration.
    """
    params = ModelParams(1.0, c, N)
    rng = np.random.default_rng(1000 * N + int(c))
    compared = 0

    for _ in range(12):
        q0 = float(rng.uniform(-1.0, 1.0))
        if c > 0:
            s0 = float(rng.uniform(-0.6 * params.cOverN, 1.0))
        else:
            s0 = float(rng.uniform(0.2, 2.0))
        p0 = float(rng.uniform(-2.0, 2.0))
        rho0 = float(10.0 ** rng.uniform(-2.0, 1.0))
        char = CharData.build(1.0, q0, s0, p0, rho0, params)

        result = classify(char, params, quickPolicy)
        assert np.isfinite(result.margin), char

        if result.verdict == Verdict.MARGINAL or abs(result.margin) < 1e-3:
            continue
        oracle = oracle_outcome(char, params)
        if oracle.kind == OracleKind.INCONCLUSIVE:
            continue
        compared += 1
        assert oracle.verdict == result.verdict, (char, result, oracle)

    assert compared > 0
