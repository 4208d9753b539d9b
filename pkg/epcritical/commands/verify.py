from typing import Any
from typing import Self

from cleo.helpers import option

from epcritical.core.ode import Tolerances
from epcritical.core.threshold import MarginPolicy
from epcritical.exceptions import exceptions
from epcritical.utilities import reports
from epcritical.utilities.run_config import RunConfig
from epcritical.verify.invariants import InvariantLedger
from epcritical.verify.invariants import invariant_suite
from epcritical.verify.sweep import AgreementReport
from epcritical.verify.sweep import agreement_sweep
from epcritical.verify.sweep import branch_sweep
from epcritical.verify.sweep import threshold_probe_sweep
import epcritical.utilities.config as cfg

from .base import BaseCommand
from .base import common_options
from .base import domainErrors

suites = ["invariants", "agreement", "probes", "branches", "all"]


# ============================================
#               VerifyCommand
# ============================================
class VerifyCommand(BaseCommand):
    name = "verify"

    description = "Checks model invariants and the classifier against integration."

    options = [
        option(
            "suite", None, f"One of: {', '.join(suites)}.", flag=False, default="all"
        ),
        option(
            "count",
            None,
            "Random instances per invariant check.",
            flag=False,
            default=str(cfg.defaultSuiteCount),
        ),
        option(
            "samples",
            None,
            "Sampled characteristics for the agreement and probe sweeps.",
            flag=False,
            default="200",
        ),
        option(
            "per-branch",
            None,
            "Compared points required per c = 0 decision branch.",
            flag=False,
            default=str(cfg.branchMinCompared),
        ),
        *common_options(),
    ]

    help = """
    Runs the verification suites for one parameter set and writes a JSON
    report with the keys `invariants`, `agreement`, `threshold_probes`
    and `branches` (null for suites that were not run).

    <info>invariants</info>  Structural properties on randomized orbits:
                conservation, the Gamma identity, closed-form A, extrema,
                envelopes, blow-up certificates, decay rates and the
                integrator itself.
    <info>agreement</info>   Classifier verdicts against direct integration on
                sampled characteristics.
    <info>probes</info>      Points just inside and just outside the envelopes.
                Every point outside the band must agree.
    <info>branches</info>    Draws aimed at each c = 0 decision branch, with a
                minimum of compared points per branch. Part of
                <info>all</info> only when c = 0.

    Exit codes: 0 when every suite passes, 4 when one fails, 1 on error.
    Identical configuration and seed give byte-identical reports.

    Examples
    --------
    ep-critical verify --suite invariants --seed 7
    ep-critical verify --params k=1,c=0,N=3 --samples 1000 -o report.json
    ep-critical verify --suite branches --params k=1,c=0,N=4 --per-branch 20
    """

    # -----
    # handle
    # -----
    def handle(self: Self) -> int:
        try:
            runConfig = self._setup()
            suite = self.option("suite")
            if suite not in suites:
                detail = f"`{suite}` is not one of {suites}"
                raise exceptions.ConfigError("--suite", detail)
            count = self._number("count", int)
            samples = self._number("samples", int)
            perBranch = self._number("per-branch", int)
            report = self._run(suite, runConfig, count, samples, perBranch)
        except domainErrors as err:
            self.line(str(err))
            return cfg.exitError

        passed = all(part["passed"] for part in report.values() if part is not None)
        self._emit(reports.to_json(report), runConfig)

        if passed:
            self.line("<success>All checks passed.</success>")
            return cfg.exitAllGlobal
        self.line("<error>Verification failed.</error>")
        return cfg.exitVerifyFailed

    # -----
    # _run
    # -----
    def _run(
        self: Self,
        suite: str,
        runConfig: RunConfig,
        count: int,
        samples: int,
        perBranch: int,
    ) -> dict[str, Any]:
        params = runConfig.model_params()
        seed = runConfig.seed
        report: dict[str, Any] = {
            "invariants": None,
            "agreement": None,
            "threshold_probes": None,
            "branches": None,
        }

        if suite in ("invariants", "all"):
            self.line("Invariant checks:")
            ledger = invariant_suite(params, seed, count, runConfig.tolerance_pair())
            self._show_ledger(ledger)
            report["invariants"] = ledger.to_record()

        policy = MarginPolicy(
            runConfig.margin,
            Tolerances(cfg.sweepRelTol, cfg.sweepAbsTol),
            runConfig.horizon.to_policy(),
            False,
        )
        band = runConfig.sampler.exclusion_band

        if suite in ("agreement", "all"):
            self.write("Agreement sweep...")
            agreement = agreement_sweep(
                runConfig.sampler.to_spec(), params, samples, seed, band, policy
            )
            self._show_report("Agreement sweep", agreement)
            report["agreement"] = agreement.to_record()

        if suite in ("probes", "all"):
            self.write("Threshold probes...")
            probes = threshold_probe_sweep(params, samples, seed, band, policy)
            self._show_report("Threshold probes", probes)
            report["threshold_probes"] = probes.to_record()

        zeroBackground = not params.hasBackground
        if suite == "branches" or (suite == "all" and zeroBackground):
            self.write("Decision branches...")
            branches = branch_sweep(params, perBranch, seed, band, policy)
            self._show_report("Decision branches", branches)
            report["branches"] = branches.to_record()

        return report

    # -----
    # _show_ledger
    # -----
    def _show_ledger(self: Self, ledger: InvariantLedger) -> None:
        for check in ledger.checks:
            mark = "<success>✓</success>" if check.passed else "<error>✗</error>"
            self.line(f"  {check.name} {mark}")

    # -----
    # _show_report
    # -----
    def _show_report(self: Self, title: str, report: AgreementReport) -> None:
        mark = "<success>✓</success>" if report.passed else "<error>✗</error>"
        self.overwrite(
            f"{title}... {mark} "
            f"({report.agree}/{report.compared} agree, "
            f"{report.excludedMarginal} excluded, "
            f"{report.inconclusive} inconclusive)\n"
        )

