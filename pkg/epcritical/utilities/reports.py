import csv
from enum import Enum
import io
import json
import math
from pathlib import Path
from typing import Any
from typing import Sequence

import numpy as np

from epcritical.core.model import CharData
from epcritical.core.model import Classification

# Flat column order used when classification records are written as CSV
classificationColumns = [
    "beta",
    "q0",
    "s0",
    "p0",
    "rho0",
    "A0",
    "kappa",
    "gamma_min",
    "gamma_max",
    "eta1_0",
    "eta2_0",
    "deta1_0",
    "deta2_0",
    "verdict",
    "reason",
    "tc_estimate",
    "margin",
]


# ============================================
#           classification_record
# ============================================
def classification_record(char: CharData, result: Classification) -> dict[str, Any]:
    """
    The JSON report record of one classified characteristic, with a
    fixed key order.
    """
    evidence = result.evidence
    envelopes = evidence.get("envelopes") or {
        "eta1_0": None,
        "eta2_0": None,
        "deta1_0": None,
        "deta2_0": None,
    }
    return {
        "beta": char.beta,
        "q0": char.q0,
        "s0": char.s0,
        "p0": char.p0,
        "rho0": char.rho0,
        "A0": char.A0,
        "kappa": evidence.get("kappa"),
        "gamma_window": evidence.get("gamma_window"),
        "envelopes": dict(envelopes),
        "verdict": result.verdict.value,
        "reason": result.reason.value,
        "tc_estimate": result.tcEstimate,
        "margin": result.margin,
    }


# -----
# flatten_classification
# -----
def flatten_classification(record: dict[str, Any]) -> dict[str, Any]:
    window = record.get("gamma_window") or [None, None]
    flat = {key: value for key, value in record.items() if key in classificationColumns}
    flat["gamma_min"], flat["gamma_max"] = window
    flat.update(record["envelopes"])
    return {key: flat.get(key) for key in classificationColumns}


# ============================================
#                  clean
# ============================================
def clean(value: Any) -> Any:
    """
    Converts numpy scalars and arrays to builtins and non-finite floats
    to None, recursively, so that JSON output is strict.
    """
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(key): clean(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [clean(item) for item in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


# ============================================
#                 to_json
# ============================================
def to_json(data: Any) -> str:
    return json.dumps(clean(data), indent=2, allow_nan=False) + "\n"


# ============================================
#                 to_csv
# ============================================
def to_csv(rows: Sequence[dict[str, Any]], columns: Sequence[str]) -> str:
    """
    CSV text with the given column order. Floats are written with
    `repr`, missing values as empty fields.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(clean(row.get(column))) for column in columns])
    return buffer.getvalue()


# -----
# _cell
# -----
def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ============================================
#                write_text
# ============================================
def write_text(text: str, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
