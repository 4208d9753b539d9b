from collections import Counter
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from functools import partial
import logging
from typing import Any

import numpy as np

from epcritical.core.aquantity import a_supremum_zero_bg
from epcritical.core.aquantity import a_window
from epcritical.core.envelopes import build_envelopes
from epcritical.core.envelopes import build_envelopes_zero_bg
from epcritical.core.model import CharData
from epcritical.core.model import ModelParams
from epcritical.core.model import Reason
from epcritical.core.model import Verdict
from epcritical.core.ode import Tolerances
from epcritical.core.threshold import MarginPolicy
from epcritical.core.threshold import classify
from epcritical.exceptions import exceptions
from epcritical.utilities.parallel import map_ordered
from epcritical.verify.oracle import OracleKind
from epcritical.verify.oracle import OracleOutcome
from epcritical.verify.oracle import oracle_outcome
import epcritical.utilities.config as cfg

logger = logging.getLogger(__name__)

# Numerical failures a sweep records instead of aborting on
_recoverable = (
    exceptions.EnvelopeNotFoundError,
    exceptions.InternalConsistencyError,
    exceptions.IntegrationError,
    exceptions.QuadratureError,
)

# Share of zero-density draws placed exactly on the p0 = k s0 / q0 line
_boundaryShare = 0.2


# ============================================
#                SamplerSpec
# ============================================
@dataclass(frozen=True)
class SamplerSpec:
    """
    Distribution of characteristic data for agreement sweeps.

    `q0` and `p0` are uniform, `rho0` log-uniform and `s0` uniform
    between `-c/N + s0Offset` and `s0Max`. A `zeroDensityFraction` of
    draws has `rho0 = 0`. Non-empty `fixedPoints` replace the random
    draws and are cycled through instead.
    """

    q0Range: tuple[float, float] = cfg.samplerQ0
    s0Offset: float = cfg.samplerS0Offset
    s0Max: float = cfg.samplerS0Max
    rho0Range: tuple[float, float] = cfg.samplerRho0
    p0Range: tuple[float, float] = cfg.samplerP0
    zeroDensityFraction: float = cfg.samplerZeroDensityFraction
    fixedPoints: tuple[CharData, ...] = ()

    # -----
    # __post_init__
    # -----
    def __post_init__(self) -> None:
        for name, (lo, hi) in (
            ("q0", self.q0Range),
            ("rho0", self.rho0Range),
            ("p0", self.p0Range),
        ):
            if not lo < hi:
                raise exceptions.InvalidSweepError(
                    f"{name} range [{lo}, {hi}] is empty"
                )
        if not self.rho0Range[0] > 0:
            raise exceptions.InvalidSweepError("rho0 range must be positive")
        if not 0 <= self.zeroDensityFraction <= 1:
            raise exceptions.InvalidSweepError("zero-density fraction outside [0, 1]")

    # -----
    # draw
    # -----
    def draw(self, rng: np.random.Generator, params: ModelParams) -> CharData:
        """
        One random characteristic. `s0` respects `s0 > -c/N` (c > 0) and
        `s0 > 0` (c = 0).
        """
        sLow = -params.cOverN + self.s0Offset
        if not sLow < self.s0Max:
            raise exceptions.InvalidSweepError(
                f"s0 range [{sLow}, {self.s0Max}] is empty"
            )
        q0 = rng.uniform(*self.q0Range)
        s0 = rng.uniform(sLow, self.s0Max)
        p0 = rng.uniform(*self.p0Range)

        if rng.random() < self.zeroDensityFraction:
            if q0 > 0 and rng.random() < _boundaryShare:
                p0 = params.k * s0 / q0
            return CharData.build(1.0, q0, s0, p0, 0.0, params)

        logLo, logHi = np.log(self.rho0Range[0]), np.log(self.rho0Range[1])
        rho0 = float(np.exp(rng.uniform(logLo, logHi)))
        return CharData.build(1.0, q0, s0, p0, rho0, params)


# ============================================
#                Disagreement
# ============================================
@dataclass(frozen=True)
class Disagreement:
    """
    A sample where the classifier and the oracle differ. `verdict` is
    None when the classifier itself failed, with the error in `detail`.
    """

    index: int
    char: CharData
    verdict: Verdict | None
    oracle: OracleOutcome
    margin: float | None = None
    detail: str = ""

    # -----
    # to_record
    # -----
    def to_record(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "q0": self.char.q0,
            "s0": self.char.s0,
            "p0": self.char.p0,
            "rho0": self.char.rho0,
            "verdict": self.verdict.value if self.verdict else None,
            "margin": self.margin,
            "oracle": self.oracle.kind.value,
            "oracle_tc": self.oracle.tc,
            "detail": self.detail,
        }


# ============================================
#              AgreementReport
# ============================================
@dataclass(frozen=True)
class AgreementReport:
    """
    Tallies of a classifier/oracle comparison.

    Every sample lands in exactly one of `agree`, `disagree`,
    `excludedMarginal` (classifier margin inside the exclusion band) or
    `inconclusive` (the oracle could not decide or failed). The report
    passes when the agreement rate reaches `target` and every reason in
    `requiredReasons` has at least `minPerReason` compared samples.
    """

    total: int
    agree: int
    disagree: tuple[Disagreement, ...]
    excludedMarginal: int
    inconclusive: int
    seed: int
    reasons: dict[str, int] = field(default_factory=dict)
    comparedReasons: dict[str, int] = field(default_factory=dict)
    target: float = cfg.agreementTarget
    requiredReasons: tuple[str, ...] = ()
    minPerReason: int = 0

    @property
    def compared(self) -> int:
        return self.agree + len(self.disagree)

    @property
    def rate(self) -> float:
        return self.agree / self.compared if self.compared else 1.0

    @property
    def uncovered(self) -> list[str]:
        return [
            reason
            for reason in self.requiredReasons
            if self.comparedReasons.get(reason, 0) < self.minPerReason
        ]

    @property
    def passed(self) -> bool:
        return self.rate >= self.target and not self.uncovered

    # -----
    # to_record
    # -----
    def to_record(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "total": self.total,
            "agree": self.agree,
            "disagree": len(self.disagree),
            "excluded_marginal": self.excludedMarginal,
            "inconclusive": self.inconclusive,
            "rate": self.rate,
            "target": self.target,
            "passed": self.passed,
            "reasons": dict(sorted(self.reasons.items())),
            "compared_reasons": dict(sorted(self.comparedReasons.items())),
            "uncovered_reasons": self.uncovered,
            "disagreements": [d.to_record() for d in self.disagree],
        }


# ============================================
#              agreement_sweep
# ============================================
def agreement_sweep(
    sampler: SamplerSpec,
    params: ModelParams,
    count: int,
    seed: int = cfg.defaultSeed,
    exclusionBand: float = cfg.exclusionBand,
    policy: MarginPolicy | None = None,
    workers: int | None = None,
) -> AgreementReport:
    """
    Classifies `count` sampled characteristics and compares each verdict
    with direct integration.

    Each sample draws from its own generator spawned from `seed`, so the
    report does not depend on the worker count.

    Raises
    ------
    InvalidSweepError
        If `count < 1`.
    """
    if count < 1:
        raise exceptions.InvalidSweepError(f"sample count must be >= 1, got {count}")

    if sampler.fixedPoints:
        fixed = sampler.fixedPoints
        chars = [fixed[i % len(fixed)] for i in range(count)]
    else:
        children = np.random.SeedSequence(seed).spawn(count)
        chars = [sampler.draw(np.random.default_rng(ss), params) for ss in children]

    return compare_with_oracle(chars, params, seed, exclusionBand, policy, workers)


# ============================================
#           threshold_probe_sweep
# ============================================
def threshold_probe_sweep(
    params: ModelParams,
    count: int,
    seed: int = cfg.defaultSeed,
    exclusionBand: float = cfg.exclusionBand,
    policy: MarginPolicy | None = None,
    workers: int | None = None,
) -> AgreementReport:
    """
    Probes the threshold itself: for sampled orbits and `A0` values with
    a valid envelope, takes eta0 between the envelopes, 5% above the
    upper one and 5% below the lower one (c > 0), or 5% to either side
    of the lower envelope (c = 0, q0 > 0, A0 < 0).

    The report passes only at full agreement outside the band.

    Raises
    ------
    InvalidSweepError
        If `count < 1`.
    """
    if count < 1:
        raise exceptions.InvalidSweepError(f"sample count must be >= 1, got {count}")

    base = policy or MarginPolicy()
    chars: list[CharData] = []
    for ss in np.random.SeedSequence(seed).spawn(count):
        rng = np.random.default_rng(ss)
        try:
            chars.extend(_threshold_probes(rng, params, base))
        except _recoverable as err:
            logger.warning("skipping threshold probe: %s", err)

    if not chars:
        raise exceptions.InvalidSweepError("no threshold probe could be built")
    report = compare_with_oracle(chars, params, seed, exclusionBand, policy, workers)
    return replace(report, target=cfg.thresholdAgreementTarget)


# -----
# _threshold_probes
# -----
def _threshold_probes(
    rng: np.random.Generator, params: ModelParams, policy: MarginPolicy
) -> list[CharData]:
    k, N = params.k, params.N
    if params.hasBackground:
        cOverN = params.cOverN
        q0 = float(rng.uniform(-1.0, 1.0)) or 0.5
        s0 = float(rng.uniform(-0.8 * cOverN, cOverN))
        lo, hi = a_window(q0, s0, params)
        A0 = float(rng.uniform(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo)))
        pair = build_envelopes(
            CharData.from_a0(q0, s0, A0, params, eta0=1.0), params, policy.tolerances
        )
        assert pair.eta2At0 is not None
        etaLo, etaHi = sorted((pair.eta1At0, pair.eta2At0))
        etas = [0.5 * (etaLo + etaHi), 1.05 * etaHi, 0.95 * etaLo]
    else:
        q0 = float(rng.uniform(0.2, 2.0))
        s0 = float(rng.uniform(0.2, 2.0))
        floor = -k / (N - 2) if N > 2 else -k
        A0 = float(rng.uniform(0.9 * floor, 0.1 * floor))
        pair = build_envelopes_zero_bg(
            CharData.from_a0(q0, s0, A0, params, eta0=1.0),
            params,
            policy.tolerances,
            policy.horizon,
        )
        etas = [1.05 * pair.eta1At0, 0.95 * pair.eta1At0]

    return [CharData.from_a0(q0, s0, A0, params, eta0=e) for e in etas if e > 0]


# ============================================
#          zero_background_branches
# ============================================
def zero_background_branches(params: ModelParams) -> tuple[Reason, ...]:
    """
    Classifier reasons of the c = 0 decision tree. N = 2 has no Riccati
    threshold.
    """
    branches = (
        Reason.RHO_ZERO_GLOBAL_BRANCH,
        Reason.RHO_ZERO_BREAKDOWN,
        Reason.RICCATI_THRESHOLD,
        Reason.NONNEGATIVE_A,
        Reason.LOWER_ENVELOPE,
        Reason.KAPPA_BEYOND_APEX,
        Reason.ENVELOPE_CONTAINMENT,
        Reason.DERIVATIVE_ENVELOPE,
    )
    if params.isPlanar:
        return tuple(b for b in branches if b != Reason.RICCATI_THRESHOLD)
    return branches


# ============================================
#               branch_sweep
# ============================================
def branch_sweep(
    params: ModelParams,
    perBranch: int = cfg.branchMinCompared,
    seed: int = cfg.defaultSeed,
    exclusionBand: float = cfg.exclusionBand,
    policy: MarginPolicy | None = None,
    workers: int | None = None,
) -> AgreementReport:
    """
    Exercises every branch of the zero-background decision tree.

    Each branch gets `cfg.branchDrawFactor * perBranch` draws aimed at
    it. The report passes only when every branch reason collects at
    least `perBranch` compared samples and the agreement target is met.
    Zero-density draws include points exactly on `p0 = k s0 / q0`.

    Raises
    ------
    InvalidSweepError
        If c > 0 or `perBranch < 1`.
    """
    if params.hasBackground:
        raise exceptions.InvalidSweepError("branch coverage needs c = 0")
    if perBranch < 1:
        raise exceptions.InvalidSweepError(
            f"points per branch must be >= 1, got {perBranch}"
        )

    base = policy or MarginPolicy()
    branches = zero_background_branches(params)
    draws = cfg.branchDrawFactor * perBranch
    chars: list[CharData] = []
    streams = np.random.SeedSequence(seed).spawn(len(branches))
    for branch, stream in zip(branches, streams):
        for child in stream.spawn(draws):
            rng = np.random.default_rng(child)
            try:
                chars.append(_branch_point(branch, rng, params, base))
            except _recoverable as err:
                logger.warning("skipping %s draw: %s", branch.value, err)

    report = compare_with_oracle(chars, params, seed, exclusionBand, policy, workers)
    return replace(
        report,
        requiredReasons=tuple(branch.value for branch in branches),
        minPerReason=perBranch,
    )


# -----
# _branch_point
# -----
def _branch_point(
    branch: Reason, rng: np.random.Generator, params: ModelParams, policy: MarginPolicy
) -> CharData:
    k, N = params.k, params.N
    floor = -k / (N - 2) if N > 2 else -k
    q0 = float(rng.uniform(0.2, 2.0))
    s0 = float(rng.uniform(0.2, 2.0))
    eta0 = float(rng.uniform(0.2, 2.0))
    sign = 1.0 if rng.random() < 0.5 else -1.0
    offset = float(rng.uniform(0.1, 0.5))

    if branch == Reason.RHO_ZERO_GLOBAL_BRANCH:
        onBoundary = rng.random() < _boundaryShare
        factor = 1.0 if onBoundary else float(rng.uniform(1.2, 3.0))
        return CharData.build(1.0, q0, s0, factor * k * s0 / q0, 0.0, params)

    if branch == Reason.RHO_ZERO_BREAKDOWN:
        if sign < 0:
            p0 = float(rng.uniform(*cfg.samplerP0))
            return CharData.build(1.0, -q0, s0, p0, 0.0, params)
        factor = float(rng.uniform(-1.0, 0.8))
        return CharData.build(1.0, q0, s0, factor * k * s0 / q0, 0.0, params)

    if branch == Reason.RICCATI_THRESHOLD:
        A0 = floor * float(rng.uniform(1.05, 3.0))
        return CharData.from_a0(sign * q0, s0, A0, params, eta0=eta0)

    if branch == Reason.NONNEGATIVE_A:
        A0 = k * float(rng.uniform(0.0, 2.0))
        return CharData.from_a0(q0, s0, A0, params, eta0=eta0)

    if branch == Reason.KAPPA_BEYOND_APEX:
        A0 = a_supremum_zero_bg(-q0, s0, params) * float(rng.uniform(1.5, 3.0))
        return CharData.from_a0(-q0, s0, A0 + 0.1 * k, params, eta0=eta0)

    if branch == Reason.LOWER_ENVELOPE:
        A0 = floor * float(rng.uniform(0.1, 0.9))
        line = CharData.from_a0(sign * q0, s0, A0, params, eta0=1.0)
        eta1 = build_envelopes_zero_bg(
            line, params, policy.tolerances, policy.horizon
        ).eta1At0
        above = rng.random() < 0.5
        eta0 = eta1 * (1.0 + offset if above else 1.0 - offset)
        return CharData.from_a0(sign * q0, s0, A0, params, eta0=eta0)

    if branch == Reason.ENVELOPE_CONTAINMENT:
        A0 = a_supremum_zero_bg(-q0, s0, params) * float(rng.uniform(0.1, 0.7))
        line = CharData.from_a0(-q0, s0, A0, params, eta0=1.0)
        pair = build_envelopes_zero_bg(line, params, policy.tolerances, policy.horizon)
        assert pair.eta2At0 is not None
        lo, hi = sorted((pair.eta1At0, pair.eta2At0))
        eta0 = (0.5 * (lo + hi), 1.1 * hi, 0.9 * lo)[int(rng.integers(3))]
        return CharData.from_a0(-q0, s0, A0, params, eta0=eta0)

    if branch == Reason.DERIVATIVE_ENVELOPE:
        A0 = floor * float(rng.uniform(0.1, 0.9))
        line = CharData.from_a0(0.0, s0, A0, params, w0=0.0)
        deta1 = build_envelopes_zero_bg(
            line, params, policy.tolerances, policy.horizon
        ).deta1At0
        w0 = deta1 + sign * offset * max(abs(deta1), 0.1)
        return CharData.from_a0(0.0, s0, A0, params, w0=w0)

    raise exceptions.InvalidSweepError(f"no generator for the {branch.value} branch")


# ============================================
#            compare_with_oracle
# ============================================
def compare_with_oracle(
    chars: list[CharData],
    params: ModelParams,
    seed: int,
    exclusionBand: float = cfg.exclusionBand,
    policy: MarginPolicy | None = None,
    workers: int | None = None,
) -> AgreementReport:
    """
    Runs classifier and oracle on every characteristic and tallies the
    outcome.
    """
    if policy is None:
        policy = MarginPolicy(
            tolerances=Tolerances(cfg.sweepRelTol, cfg.sweepAbsTol),
            estimateBreakdownTime=False,
        )
    else:
        policy = replace(policy, estimateBreakdownTime=False)

    task = partial(_evaluate, params=params, policy=policy, band=exclusionBand)
    outcomes = map_ordered(task, list(enumerate(chars)), workers)

    agree = excluded = inconclusive = 0
    disagree: list[Disagreement] = []
    reasons: Counter[str] = Counter()
    comparedReasons: Counter[str] = Counter()
    for category, reason, disagreement in outcomes:
        if reason:
            reasons[reason] += 1
            if category in ("agree", "disagree"):
                comparedReasons[reason] += 1
        if category == "agree":
            agree += 1
        elif category == "excluded":
            excluded += 1
        elif category == "inconclusive":
            inconclusive += 1
        else:
            assert disagreement is not None
            disagree.append(disagreement)

    report = AgreementReport(
        len(chars),
        agree,
        tuple(disagree),
        excluded,
        inconclusive,
        seed,
        dict(reasons),
        dict(comparedReasons),
    )
    logger.info(
        "agreement %d/%d (excluded %d, inconclusive %d)",
        agree,
        report.compared,
        excluded,
        inconclusive,
    )
    return report


# -----
# _evaluate
# -----
def _evaluate(
    item: tuple[int, CharData], params: ModelParams, policy: MarginPolicy, band: float
) -> tuple[str, str | None, Disagreement | None]:
    index, char = item
    try:
        oracle = oracle_outcome(char, params, policy.horizon, policy.tolerances)
    except _recoverable as err:
        logger.warning("oracle failed on sample %d: %s", index, err)
        return "inconclusive", None, None

    try:
        result = classify(char, params, policy)
    except _recoverable as err:
        logger.warning("classifier failed on sample %d: %s", index, err)
        return "disagree", None, Disagreement(index, char, None, oracle, None, str(err))

    reason = result.reason.value
    if result.verdict == Verdict.MARGINAL or abs(result.margin) < band:
        return "excluded", reason, None
    if oracle.kind == OracleKind.INCONCLUSIVE:
        return "inconclusive", reason, None
    if oracle.verdict == result.verdict:
        return "agree", reason, None
    return "disagree", reason, Disagreement(
        index, char, result.verdict, oracle, result.margin
    )
