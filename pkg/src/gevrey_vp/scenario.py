"""Declarative scenarios: TOML parsing, validation and initial data.

A scenario file has top-level ``name`` and ``seed`` keys and the tables
``grid``, ``potential``, ``gevrey``, ``step``, ``initial_data``, ``outputs``
and (optionally) ``monitor``.  Every table is checked against a fixed schema
before anything is allocated; unknown keys are errors.  ``to_toml`` writes
every field explicitly, so parse -> serialize -> parse is the identity.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .dynamics import PotentialSpec
from .errors import RadiusTooLargeError, ValidationError
from .integrator import StepPolicy
from .norms import GevreyParams, gevrey_norm
from .phase_space import GridSpec, PhaseSpectrum, to_physical, to_spectral
from .snapshot import read_snapshot

INITIAL_KINDS = ("homogeneous_gaussian", "landau", "two_stream", "snapshot")
BOUNDARY_TOL = 1e-14

_REQ = object()  # marks a required key in the schema tables


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _is_real(x):
    return (_is_int(x) or isinstance(x, float)) and math.isfinite(x)


_CHECKS = {
    int: (_is_int, "an integer"),
    float: (_is_real, "a finite number"),
    str: (lambda x: isinstance(x, str), "a string"),
}

# table -> key -> (type, default)
SCHEMA = {
    "grid": {"dim": (int, _REQ), "n_x": (int, _REQ), "n_v": (int, _REQ), "v_max": (float, _REQ),
             "dealias_fraction": (str, "2/3")},
    "potential": {"kind": (str, "coulomb_repulsive"), "c_w": (float, 1.0)},
    "gevrey": {"lambda0": (float, _REQ), "sigma": (float, _REQ), "s": (float, 1.0), "M": (int, 1)},
    "step": {"dt": (float, _REQ), "t_end": (float, _REQ), "scheme": (str, "strang_split"),
             "cfl_guard": (float, 1.0)},
    "initial_data": {"kind": (str, _REQ), "k0": (int, None), "eps": (float, None), "v0": (float, None),
                     "path": (str, None)},
    "outputs": {"directory": (str, _REQ), "snapshot_stride": (int, 0), "csv_stride": (int, 1)},
    "monitor": {"ceiling": (float, None), "c_env": (float, 1.0), "c_cap": (float, 1e6)},
}
TOP_LEVEL = {"name": (str, _REQ), "seed": (int, 0)}
OPTIONAL_TABLES = ("potential", "monitor")
INITIAL_FIELDS = {
    "homogeneous_gaussian": (),
    "landau": ("k0", "eps"),
    "two_stream": ("v0", "eps"),
    "snapshot": ("path",),
}


def _read_table(raw, schema: dict, where: str) -> dict:
    if not isinstance(raw, dict):
        raise ValidationError(f"[{where}] must be a table")
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ValidationError(f"unknown key(s) in [{where}]: {', '.join(unknown)}")
    out = {}
    for key, (typ, default) in schema.items():
        if key not in raw:
            if default is _REQ:
                raise ValidationError(f"missing required key {where}.{key}")
            out[key] = default
            continue
        check, what = _CHECKS[typ]
        value = raw[key]
        if not check(value):
            raise ValidationError(f"{where}.{key} must be {what}, got {value!r}")
        out[key] = float(value) if typ is float else value
    return out


@dataclass(frozen=True)
class InitialData:
    kind: str
    k0: int | None = None
    eps: float | None = None
    v0: float | None = None
    path: str | None = None

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS:
            raise ValidationError(f"unknown initial_data.kind {self.kind!r}; expected one of {INITIAL_KINDS}")
        needed = INITIAL_FIELDS[self.kind]
        for name in ("k0", "eps", "v0", "path"):
            present = getattr(self, name) is not None
            if name in needed and not present:
                raise ValidationError(f"initial_data.{name} is required for kind {self.kind!r}")
            if name not in needed and present:
                raise ValidationError(f"initial_data.{name} does not apply to kind {self.kind!r}")

    def as_dict(self) -> dict:
        out = {"kind": self.kind}
        for name in INITIAL_FIELDS[self.kind]:
            out[name] = getattr(self, name)
        return out


@dataclass(frozen=True)
class OutputSpec:
    directory: str
    snapshot_stride: int = 0
    csv_stride: int = 1

    def __post_init__(self):
        if not self.directory:
            raise ValidationError("outputs.directory must be non-empty")
        if self.snapshot_stride < 0:
            raise ValidationError("outputs.snapshot_stride must be >= 0 (0 disables periodic snapshots)")
        if self.csv_stride < 1:
            raise ValidationError("outputs.csv_stride must be >= 1")


@dataclass(frozen=True)
class MonitorSpec:
    """Blow-up ceiling (``None``: never halt), envelope constant and Sobolev-fit cap."""

    ceiling: float | None = None
    c_env: float = 1.0
    c_cap: float = 1e6

    def __post_init__(self):
        if self.ceiling is not None and not self.ceiling > 0:
            raise ValidationError("monitor.ceiling must be positive")
        if not self.c_env > 0 or not self.c_cap > 0:
            raise ValidationError("monitor.c_env and monitor.c_cap must be positive")


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    grid: GridSpec
    potential: PotentialSpec
    gevrey: GevreyParams
    step: StepPolicy
    initial_data: InitialData
    outputs: OutputSpec
    monitor: MonitorSpec = MonitorSpec()
    seed: int = 0
    source_dir: Path | None = field(default=None, compare=False, repr=False)

    # -- parsing -------------------------------------------------------------
    @classmethod
    def from_dict(cls, raw: dict, source_dir=None) -> "ScenarioSpec":
        if not isinstance(raw, dict):
            raise ValidationError("scenario must be a table")
        known = set(SCHEMA) | set(TOP_LEVEL)
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ValidationError(f"unknown top-level key(s): {', '.join(unknown)}")
        top = _read_table({k: raw[k] for k in TOP_LEVEL if k in raw}, TOP_LEVEL, "scenario")
        tables = {}
        for name, schema in SCHEMA.items():
            if name not in raw:
                if name in OPTIONAL_TABLES:
                    tables[name] = _read_table({}, schema, name)
                    continue
                raise ValidationError(f"missing table [{name}]")
            tables[name] = _read_table(raw[name], schema, name)
        g, gv = tables["grid"], tables["gevrey"]
        try:
            frac = g["dealias_fraction"]
            grid = GridSpec(dim=g["dim"], n_x=g["n_x"], n_v=g["n_v"], v_max=g["v_max"], dealias_fraction=frac)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"invalid [grid]: {exc}") from exc
        if not gv["lambda0"] > 0:
            raise ValidationError(f"gevrey.lambda0 must be positive, got {gv['lambda0']}")
        return cls(
            name=top["name"],
            grid=grid,
            potential=PotentialSpec(**tables["potential"]),
            gevrey=GevreyParams(lam=gv["lambda0"], sigma=gv["sigma"], s=gv["s"], M=gv["M"]),
            step=StepPolicy(**tables["step"]),
            initial_data=InitialData(**tables["initial_data"]),
            outputs=OutputSpec(**tables["outputs"]),
            monitor=MonitorSpec(**tables["monitor"]),
            seed=top["seed"],
            source_dir=None if source_dir is None else Path(source_dir),
        )

    @classmethod
    def from_toml(cls, text: str, source_dir=None) -> "ScenarioSpec":
        try:
            raw = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ValidationError(f"scenario is not valid TOML: {exc}") from exc
        return cls.from_dict(raw, source_dir)

    @classmethod
    def load(cls, path) -> "ScenarioSpec":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ValidationError(f"cannot read scenario {path}: {exc}") from exc
        return cls.from_toml(text, source_dir=path.parent)

    # -- serialization ---------------------------------------------------------
    def to_dict(self) -> dict:
        g = self.grid
        out = {
            "name": self.name,
            "seed": self.seed,
            "grid": {"dim": g.dim, "n_x": g.n_x, "n_v": g.n_v, "v_max": g.v_max,
                     "dealias_fraction": str(g.dealias_fraction)},
            "potential": {"kind": self.potential.kind, "c_w": float(self.potential.c_w)},
            "gevrey": {"lambda0": float(self.gevrey.lam), "sigma": float(self.gevrey.sigma),
                       "s": float(self.gevrey.s), "M": int(self.gevrey.M)},
            "step": {"dt": float(self.step.dt), "t_end": float(self.step.t_end), "scheme": self.step.scheme,
                     "cfl_guard": float(self.step.cfl_guard)},
            "initial_data": self.initial_data.as_dict(),
            "outputs": {"directory": self.outputs.directory, "snapshot_stride": self.outputs.snapshot_stride,
                        "csv_stride": self.outputs.csv_stride},
            "monitor": {"c_env": self.monitor.c_env, "c_cap": self.monitor.c_cap},
        }
        if self.monitor.ceiling is not None:
            out["monitor"]["ceiling"] = self.monitor.ceiling
        return out

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def replace(self, **changes) -> "ScenarioSpec":
        data = {name: getattr(self, name) for name in self.__dataclass_fields__}
        data.update(changes)
        return ScenarioSpec(**data)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        if p.is_absolute() or self.source_dir is None:
            return p
        return self.source_dir / p


# -- initial data ---------------------------------------------------------------
def maxwellian(grid: GridSpec, drift: float = 0.0) -> np.ndarray:
    """Unit-temperature Maxwellian in ``v`` (shifted by ``drift`` along ``v_1``), broadcast over ``x``."""
    vm = grid.v_mesh()
    r2 = sum((v - (drift if i == 0 else 0.0)) ** 2 for i, v in enumerate(vm))
    return (2 * np.pi) ** (-grid.dim / 2) * np.exp(-0.5 * r2) * np.ones(grid.shape)


def physical_initial(data: InitialData, grid: GridSpec) -> np.ndarray:
    """Sampled ``f(0, x, v)`` for the analytic kinds."""
    if data.kind == "homogeneous_gaussian":
        return maxwellian(grid)
    x1 = grid.x_mesh()[0]
    if data.kind == "landau":
        if abs(data.k0) > grid.K or data.k0 == 0:
            raise ValidationError(f"landau k0={data.k0} must satisfy 0 < |k0| <= K={grid.K}")
        return maxwellian(grid) * (1.0 + data.eps * np.cos(data.k0 * x1))
    if data.kind == "two_stream":
        if grid.K < 1:
            raise ValidationError("two_stream needs at least one nonzero spatial mode (n_x >= 3)")
        pair = 0.5 * (maxwellian(grid, data.v0) + maxwellian(grid, -data.v0))
        return pair * (1.0 + data.eps * np.cos(x1))
    raise ValidationError(f"initial data kind {data.kind!r} has no closed form")


@dataclass
class InitialState:
    spectrum: PhaseSpectrum
    header: dict | None = None  # snapshot header when resuming
    warnings: list = field(default_factory=list)

    @property
    def step(self) -> int:
        return 0 if self.header is None else int(self.header["step"])


def boundary_value(spec: PhaseSpectrum) -> float:
    """Largest ``|f|`` on the velocity-box faces."""
    f = to_physical(spec, check=False)
    return max(float(np.max(np.abs(np.take(f, 0, axis=axis)))) for axis in spec.grid.v_axes)


def build_initial(scenario: ScenarioSpec) -> InitialState:
    """Initial spectrum plus startup checks.

    Raises :class:`ValidationError` if the initial Gevrey norm is not finite on
    the grid.  A velocity boundary value above ``1e-14`` and parameters outside
    the propagation hypotheses only warn.
    """
    data, grid = scenario.initial_data, scenario.grid
    header = None
    if data.kind == "snapshot":
        spec, header = read_snapshot(scenario.resolve(data.path))
        if spec.grid != grid:
            raise ValidationError(f"snapshot grid {spec.grid} does not match scenario grid {grid}")
        if int(header["step"]) > scenario.step.n_steps:
            raise ValidationError("snapshot lies beyond the scenario end time")
        lam = float(header["lambda"])
    else:
        spec = to_spectral(physical_initial(data, grid), grid)
        if data.kind == "homogeneous_gaussian":
            # independent of x: the k != 0 coefficients are FFT rounding noise
            coeffs = np.zeros_like(spec.coeffs)
            coeffs[(0,) * grid.dim] = spec.coeffs[(0,) * grid.dim]
            spec = spec.replace(coeffs)
        lam = scenario.gevrey.lam
    issues = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        scenario.gevrey.check_applicability(grid.dim)
    issues.extend(str(w.message) for w in caught)
    try:
        g = gevrey_norm(spec, scenario.gevrey.with_(lam=lam))
    except RadiusTooLargeError as exc:
        raise ValidationError(f"initial Gevrey norm is not representable on this grid: {exc}") from exc
    if not math.isfinite(g):
        raise ValidationError(f"initial Gevrey norm is not finite (got {g})")
    edge = boundary_value(spec)
    if edge > BOUNDARY_TOL:
        issues.append(f"velocity boundary value {edge:.2e} exceeds {BOUNDARY_TOL:g}; enlarge v_max")
    for msg in issues:
        warnings.warn(msg, stacklevel=2)
    return InitialState(spectrum=spec, header=header, warnings=issues)
