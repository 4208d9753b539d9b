import csv
import json
from pathlib import Path

from cleo.testers.command_tester import CommandTester
import numpy as np
import pytest

from epcritical.console.application import EpCriticalApplication
import epcritical.utilities.config as cfg


# ============================================
#                  _tester
# ============================================
def _tester(name: str) -> CommandTester:
    app = EpCriticalApplication()
    return CommandTester(app.find(name))


# ============================================
#                 _read_csv
# ============================================
def _read_csv(path: Path) -> list[dict[str, str]]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# ============================================
#           test_classify_exit_codes
# ============================================
@pytest.mark.parametrize(
    "point, expected",
    [
        ("1,1,-1,2,1", cfg.exitAllGlobal),
        ("1,-1,-1,2,0", cfg.exitAnyBreakdown),
        ("1,1,-1,0.999999999,0", cfg.exitAnyMarginal),
    ],
)
def test_classify_exit_codes(point: str, expected: int) -> None:
    tester = _tester("classify")
    status = tester.execute(f"--point={point} --params=k=1,c=0,N=3")

    assert status == expected


# ============================================
#             test_classify_errors
# ============================================
@pytest.mark.parametrize(
    "args",
    [
        "--point=1,1,-1,2,1 --params=k=x",
        "--point=1,1,-1",
        "--point=1,1,-1,2,1 --format=xml",
        "--point=1,1,-1,2,1 --profile=profile.csv",
        "",
    ],
)
def test_classify_errors(args: str) -> None:
    tester = _tester("classify")

    assert tester.execute(args) == cfg.exitError
    assert "Error" in tester.io.fetch_output()


# ============================================
#            test_classify_report
# ============================================
def test_classify_report(tmp_path: Path) -> None:
    out = tmp_path / "report.json"
    tester = _tester("classify")
    status = tester.execute(f"--point=1,1,-1,2,1 --params=k=1,c=0,N=3 --out={out}")
    records = json.loads(out.read_text())

    assert status == cfg.exitAllGlobal
    assert len(records) == 1
    assert records[0]["verdict"] == "Global"
    assert records[0]["reason"] == "NonnegativeA"
    assert records[0]["A0"] == pytest.approx(1.0)


# ============================================
#            test_classify_profile
# ============================================
def test_classify_profile(tmp_path: Path) -> None:
    profile = tmp_path / "profile.csv"
    profile.write_text("r,rho0,u0\n0.5,1.0,0.5\n1.0,1.0,1.0\n2.0,1.0,2.0\n")
    out = tmp_path / "report.csv"
    tester = _tester("classify")
    status = tester.execute(
        f"--profile={profile} --radii-grid=3 --params=k=1,c=0,N=3 --out={out}"
    )
    rows = _read_csv(out)

    assert status == cfg.exitAllGlobal
    assert len(rows) == 3
    assert {row["reason"] for row in rows} == {"NonnegativeA"}
    assert float(rows[0]["beta"]) == pytest.approx(0.5)


# ============================================
#          test_sweep_breakdown_grid
# ============================================
def test_sweep_breakdown_grid(tmp_path: Path) -> None:
    out = tmp_path / "region.csv"
    tester = _tester("sweep")
    status = tester.execute(
        "--base=1,1,-1 --u0r-range=-5,-3,3 --rho0-range=0.5,2,2 "
        f"--params=k=1,c=0,N=3 --out={out}"
    )
    rows = _read_csv(out)

    assert status == cfg.exitAllGlobal
    assert list(rows[0]) == cfg.regionColumns
    assert len(rows) == 6
    assert {row["verdict"] for row in rows} == {"Breakdown"}


# ============================================
#            test_sweep_global_cell
# ============================================
def test_sweep_global_cell(tmp_path: Path) -> None:
    out = tmp_path / "region.json"
    tester = _tester("sweep")
    tester.execute(
        "--base=1,1,-1 --u0r-range=2,2,1 --rho0-range=1,1,1 "
        f"--params=k=1,c=0,N=3 --format=json --out={out}"
    )
    rows = json.loads(out.read_text())

    assert len(rows) == 1
    assert rows[0]["verdict"] == "Global"
    assert rows[0]["a"] == pytest.approx(1.0)


# ============================================
#              test_sweep_a_line
# ============================================
def test_sweep_a_line(tmp_path: Path) -> None:
    out = tmp_path / "line.csv"
    tester = _tester("sweep")
    tester.execute(
        "--base=1,0.1,0.1 --rho0-range=0.5,2,3 --a-values=0.15 "
        f"--params=k=1,c=1,N=4 --out={out}"
    )
    rows = _read_csv(out)

    assert len(rows) == 3
    np.testing.assert_allclose([float(row["a"]) for row in rows], 0.15, rtol=1e-12)


# ============================================
#             test_sweep_errors
# ============================================
@pytest.mark.parametrize(
    "args",
    [
        "--u0r-range=0,1,2 --rho0-range=0.5,1,2",
        "--base=0,1,1 --u0r-range=0,1,2 --rho0-range=0.5,1,2",
        "--base=1,1,-1 --u0r-range=0,1,0 --rho0-range=0.5,1,2",
        "--base=1,0,-1 --rho0-range=0.5,1,2 --a-values=0.1",
        "--base=1,1,-1 --rho0-range=-1,1,2 --u0r-range=0,1,2",
    ],
)
def test_sweep_errors(args: str) -> None:
    tester = _tester("sweep")

    assert tester.execute(f"{args} --params=k=1,c=0,N=3") == cfg.exitError


# ============================================
#           test_simulate_zero_density
# ============================================
def test_simulate_zero_density(tmp_path: Path) -> None:
    out = tmp_path / "trajectory.json"
    tester = _tester("simulate")
    status = tester.execute(
        f"--point=1,0,0,0,0 --params=k=1,c=1,N=4 --format=json --out={out}"
    )
    report = json.loads(out.read_text())
    summary = report["summary"]

    assert status == cfg.exitAllGlobal
    assert summary["termination"] == "BlowupDetected"
    assert summary["tc_estimate"] == pytest.approx(np.pi / 2, abs=1e-3)
    assert all(row["eta"] is None for row in report["trajectory"])
    assert "Breakdown near" in tester.io.fetch_output()


# ============================================
#              test_simulate_csv
# ============================================
def test_simulate_csv(tmp_path: Path) -> None:
    out = tmp_path / "trajectory.csv"
    tester = _tester("simulate")
    tester.execute(
        "--point=1,0.1,0.1,0.2,1 --params=k=1,c=1,N=4 "
        f"--horizon=2 --samples=11 --out={out}"
    )
    rows = _read_csv(out)

    assert list(rows[0]) == cfg.trajectoryColumns
    assert len(rows) == 11
    assert float(rows[0]["eta"]) == pytest.approx(1.0)
    assert float(rows[0]["Gamma"]) == pytest.approx(1.0)


# ============================================
#            test_simulate_errors
# ============================================
@pytest.mark.parametrize(
    "args", ["", "--point=1,0,0,0,0 --samples=1", "--point=1,0,0,0,0 --horizon=0"]
)
def test_simulate_errors(args: str) -> None:
    tester = _tester("simulate")

    assert tester.execute(args) == cfg.exitError


# ============================================
#            test_phase_default_orbits
# ============================================
def test_phase_default_orbits(tmp_path: Path) -> None:
    out = tmp_path / "phase.csv"
    tester = _tester("phase")
    status = tester.execute(f"--params=k=1,c=1,N=4 --samples=25 --out={out}")
    rows = _read_csv(out)

    assert status == cfg.exitAllGlobal
    assert list(rows[0]) == ["orbit", *cfg.phaseColumns]
    assert len(rows) == 5 * 25
    assert {row["orbit"] for row in rows} == {"0", "1", "2", "3", "4"}
    assert max(abs(float(row["R_drift"])) for row in rows) < 1e-6
    assert min(float(row["s_tilde"]) for row in rows) > 0


# ============================================
#           test_phase_zero_background
# ============================================
def test_phase_zero_background(tmp_path: Path) -> None:
    out = tmp_path / "phase.json"
    tester = _tester("phase")
    tester.execute(
        "--params=k=1,c=0,N=3 --orbit=-1,1 --orbit=0.5,2 "
        f"--horizon=10 --samples=5 --format=json --out={out}"
    )
    rows = json.loads(out.read_text())

    assert len(rows) == 10
    assert rows[0]["q"] == pytest.approx(-1.0)
    assert rows[-1]["t"] == pytest.approx(10.0)


# ============================================
#              test_phase_errors
# ============================================
def test_phase_errors() -> None:
    tester = _tester("phase")

    assert tester.execute("--params=k=1,c=1,N=4 --orbit=0,-1") == cfg.exitError
    assert tester.execute("--params=k=1,c=1,N=4 --periods=0") == cfg.exitError


# ============================================
#          test_verify_is_reproducible
# ============================================
@pytest.mark.slow
def test_verify_is_reproducible(tmp_path: Path) -> None:
    reportsOut = [tmp_path / "first.json", tmp_path / "second.json"]
    for out in reportsOut:
        tester = _tester("verify")
        status = tester.execute(f"--suite=invariants --seed=7 --count=1 --out={out}")
        assert status in (cfg.exitAllGlobal, cfg.exitVerifyFailed)

    first, second = (out.read_bytes() for out in reportsOut)
    report = json.loads(first)

    assert first == second
    assert report["agreement"] is None
    assert report["invariants"]["seed"] == 7


# ============================================
#            test_verify_bad_suite
# ============================================
def test_verify_bad_suite() -> None:
    tester = _tester("verify")

    assert tester.execute("--suite=everything") == cfg.exitError


# ============================================
#          test_verify_branches_errors
# ============================================
@pytest.mark.parametrize(
    "args",
    [
        "--suite=branches --params=k=1,c=1,N=4",
        "--suite=branches --params=k=1,c=0,N=3 --per-branch=0",
        "--suite=branches --params=k=1,c=0,N=3 --per-branch=x",
    ],
)
def test_verify_branches_errors(args: str) -> None:
    tester = _tester("verify")

    assert tester.execute(args) == cfg.exitError
    assert "Error" in tester.io.fetch_output()


# ============================================
#            test_verify_branches
# ============================================
@pytest.mark.slow
def test_verify_branches(tmp_path: Path) -> None:
    out = tmp_path / "branches.json"
    tester = _tester("verify")
    status = tester.execute(
        f"--suite=branches --params=k=1,c=0,N=3 --per-branch=1 --seed=2 --out={out}"
    )
    report = json.loads(out.read_text())

    assert status in (cfg.exitAllGlobal, cfg.exitVerifyFailed)
    assert report["invariants"] is None
    assert report["branches"]["target"] == cfg.agreementTarget
    assert "uncovered_reasons" in report["branches"]
