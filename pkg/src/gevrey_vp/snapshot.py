"""Binary snapshot files.

Layout: a UTF-8 header of ``key: value`` lines opened by the magic line
``GEVREY-VP SNAPSHOT`` and closed by ``end_header``, followed immediately by
the coefficients as little-endian complex128 (interleaved float64 real and
imaginary parts) in canonical row-major FFT order.

Floats are written with ``repr`` so they parse back bit-exactly.  Keys
prefixed ``tracker.`` carry the radius-tracker state needed to resume a run.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ValidationError
from .phase_space import GridSpec, PhaseSpectrum

MAGIC = "GEVREY-VP SNAPSHOT"
SCHEMA_VERSION = 1
_REQUIRED = ("schema_version", "dim", "n_x", "n_v", "v_max", "dealias_fraction",
             "time", "step", "lambda", "payload_bytes")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def write_snapshot(path, spec: PhaseSpectrum, time: float, lam: float, step: int = 0,
                   extra: dict | None = None) -> Path:
    path = Path(path)
    grid = spec.grid
    payload = np.ascontiguousarray(spec.coeffs, dtype="<c16").tobytes()
    header = {
        "schema_version": SCHEMA_VERSION,
        "dim": grid.dim,
        "n_x": grid.n_x,
        "n_v": grid.n_v,
        "v_max": float(grid.v_max),
        "dealias_fraction": str(grid.dealias_fraction),
        "time": float(time),
        "step": int(step),
        "lambda": float(lam),
        "payload_bytes": len(payload),
    }
    for key, value in (extra or {}).items():
        if "\n" in str(value) or ":" in key:
            raise ValidationError(f"illegal snapshot header entry {key!r}")
        header[key] = value
    lines = [MAGIC] + [f"{k}: {_fmt(v)}" for k, v in header.items()] + ["end_header"]
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("utf-8"))
        fh.write(payload)
    return path


def read_header(fh) -> dict:
    first = fh.readline().decode("utf-8").rstrip("\n")
    if first != MAGIC:
        raise ValidationError(f"not a snapshot file (magic {first!r})")
    header = {}
    while True:
        line = fh.readline()
        if not line:
            raise ValidationError("snapshot header not terminated")
        text = line.decode("utf-8").rstrip("\n")
        if text == "end_header":
            break
        key, sep, value = text.partition(": ")
        if not sep:
            raise ValidationError(f"malformed header line {text!r}")
        header[key] = _parse_value(value)
    missing = [k for k in _REQUIRED if k not in header]
    if missing:
        raise ValidationError(f"snapshot header missing keys {missing}")
    if header["schema_version"] != SCHEMA_VERSION:
        raise ValidationError(f"unsupported snapshot schema {header['schema_version']}")
    header["dealias_fraction"] = str(header["dealias_fraction"])
    return header


def read_snapshot(path) -> tuple:
    """Return ``(spectrum, header)``."""
    with open(path, "rb") as fh:
        header = read_header(fh)
        payload = fh.read()
    grid = GridSpec(dim=int(header["dim"]), n_x=int(header["n_x"]), n_v=int(header["n_v"]),
                    v_max=float(header["v_max"]), dealias_fraction=header["dealias_fraction"])
    if len(payload) != header["payload_bytes"] or len(payload) != 16 * int(np.prod(grid.shape)):
        raise ValidationError(
            f"payload size {len(payload)} inconsistent with header/grid ({header['payload_bytes']})")
    coeffs = np.frombuffer(payload, dtype="<c16").astype(np.complex128).reshape(grid.shape)
    return PhaseSpectrum.wrap(grid, coeffs), header
