import csv
import json
from pathlib import Path

import numpy as np

from epcritical.core.model import RadialProfile
from epcritical.exceptions import exceptions
import epcritical.utilities.config as cfg


# ============================================
#                load_profile
# ============================================
def load_profile(path: Path | str) -> RadialProfile:
    """
    Reads a radial profile from a CSV file with header `r,rho0,u0` or a
    JSON array of `{"r": ..., "rho0": ..., "u0": ...}` objects. The
    format is picked from the file suffix.

    Raises
    ------
    ProfileFormatError
        If the file is unreadable, has the wrong columns, holds
        non-numeric values or violates the sample requirements.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise exceptions.ProfileFormatError(path, err.strerror or str(err)) from err

    if path.suffix.lower() == ".json":
        rows = _json_rows(text, path)
    else:
        rows = _csv_rows(text, path)

    if not rows:
        raise exceptions.ProfileFormatError(path, "The profile holds no samples.")
    table = np.array(rows, dtype=float)
    return RadialProfile(table[:, 0], table[:, 1], table[:, 2], str(path))


# -----
# _csv_rows
# -----
def _csv_rows(text: str, path: Path) -> list[list[float]]:
    reader = csv.reader(text.splitlines())
    header = [name.strip() for name in next(reader, [])]
    expected = ",".join(cfg.profileColumns)
    if header != cfg.profileColumns:
        raise exceptions.ProfileFormatError(
            path, f"Header must be `{expected}`, got `{','.join(header)}`."
        )
    rows = []
    for lineNo, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(cfg.profileColumns):
            raise exceptions.ProfileFormatError(
                path, f"Line {lineNo} has {len(row)} fields."
            )
        rows.append(_numbers(row, path, f"line {lineNo}"))
    return rows


# -----
# _json_rows
# -----
def _json_rows(text: str, path: Path) -> list[list[float]]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise exceptions.ProfileFormatError(path, f"Invalid JSON: {err.msg}.") from err
    if not isinstance(data, list):
        raise exceptions.ProfileFormatError(path, "Expected an array of samples.")

    rows = []
    for i, entry in enumerate(data):
        if not isinstance(entry, dict) or set(entry) != set(cfg.profileColumns):
            raise exceptions.ProfileFormatError(
                path, f"Sample {i} must have exactly the keys r, rho0, u0."
            )
        values = [entry[key] for key in cfg.profileColumns]
        rows.append(_numbers(values, path, f"sample {i}"))
    return rows


# -----
# _numbers
# -----
def _numbers(values: list, path: Path, where: str) -> list[float]:
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError) as err:
        detail = f"Non-numeric value in {where}."
        raise exceptions.ProfileFormatError(path, detail) from err


# ============================================
#                save_profile
# ============================================
def save_profile(profile: RadialProfile, path: Path | str) -> None:
    """
    Writes a profile as CSV (or JSON for a `.json` suffix) that
    `load_profile` reads back.
    """
    path = Path(path)
    rows = [
        [float(r), float(rho), float(u)]
        for r, rho, u in zip(profile.r, profile.rho0, profile.u0)
    ]
    if path.suffix.lower() == ".json":
        records = [dict(zip(cfg.profileColumns, row)) for row in rows]
        path.write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
        return
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cfg.profileColumns)
        writer.writerows([[repr(v) for v in row] for row in rows])
