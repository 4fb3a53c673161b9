"""Per-step diagnostics rows and their CSV file.

Row 1 of the file is the schema line, row 2 the column header.  A row at
step ``n`` carries the norms of the state at ``t = n dt`` (radius
``lambda_n``), and the energy terms and identity residual of the step that
ended there (evaluated at its midpoint).  Floats are written with ``repr`` so
files compare bit-exactly.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .energy import EnergyBreakdown
from .errors import ValidationError
from .norms import NormReport

SCHEMA_LINE = "# gevrey-vp diagnostics schema 1"
RADIUS_COLUMNS = ("lambda", "lambda_dot", "integral_blowup", "integral_A", "a_of_t", "monitor", "c_fit")
CONSERVATION_COLUMNS = ("mass_drift", "l2_drift", "realness")
COLUMNS = (("t", "step") + NormReport.CSV_COLUMNS + EnergyBreakdown.CSV_COLUMNS
           + RADIUS_COLUMNS + CONSERVATION_COLUMNS)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    step: int
    norms: NormReport
    energy: EnergyBreakdown
    radius: dict
    conservation: tuple

    def as_row(self) -> dict:
        row = {"t": self.t, "step": self.step}
        row.update(self.norms.as_row())
        row.update(self.energy.as_row())
        row.update({c: self.radius[c] for c in RADIUS_COLUMNS})
        row.update(zip(CONSERVATION_COLUMNS, self.conservation))
        return row


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class DiagnosticsWriter:
    """Append-only CSV writer that enforces the schema and increasing ``t``."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="", encoding="utf-8")
        self._fh.write(SCHEMA_LINE + "\n")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(COLUMNS)
        self._last_t = -np.inf
        self.rows = 0

    def write(self, record: DiagnosticsRecord):
        if not record.t > self._last_t:
            raise ValidationError(f"diagnostics rows must increase in t ({record.t} after {self._last_t})")
        row = record.as_row()
        self._writer.writerow([_fmt(row[c]) for c in COLUMNS])
        self._fh.flush()
        self._last_t = record.t
        self.rows += 1

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_diagnostics(path) -> dict:
    """Column name -> ``float`` array (``step`` as ``int``)."""
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\r\n")
        if first != SCHEMA_LINE:
            raise ValidationError(f"unexpected diagnostics schema line {first!r}")
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValidationError("diagnostics header does not match the schema")
        rows = list(reader)
    data = np.array(rows, dtype=float).reshape(len(rows), len(COLUMNS))
    out = {c: data[:, i] for i, c in enumerate(COLUMNS)}
    out["step"] = out["step"].astype(int)
    return out
