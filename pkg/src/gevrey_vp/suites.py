"""Verification suites behind ``gevrey-vp verify``.

Each suite returns a :class:`SuiteReport` of named checks against fixed
thresholds.  Default sizes are the documented ones; the keyword arguments
exist so tests can shrink them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import inequality_lab as lab
from .dynamics import PotentialSpec, density
from .errors import ValidationError
from .integrator import ConservationLedger, StepPolicy, evolve, step
from .norms import GevreyParams
from .phase_space import GridSpec, PhaseSpectrum, to_spectral
from .regularity import RadiusState, RadiusTracker
from .runner import IdentityStepper
from .scenario import maxwellian

SUITES = ("inequalities", "energy_identity", "transport_oracle", "conservation")


@dataclass(frozen=True)
class Check:
    label: str
    value: float
    threshold: float
    op: str = "<"

    @property
    def ok(self) -> bool:
        if not math.isfinite(self.value):
            return False
        if self.op == "<":
            return self.value < self.threshold
        if self.op == "<=":
            return self.value <= self.threshold
        return self.value >= self.threshold

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'}  {self.label}: {self.value:.4g} ({self.op} {self.threshold:g})"


@dataclass
class SuiteReport:
    name: str
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.ok for c in self.checks)

    def text(self) -> str:
        head = f"[{self.name}] {'PASS' if self.passed else 'FAIL'}"
        return "\n".join([head] + ["  " + c.line() for c in self.checks] + ["  " + n for n in self.notes])


def modulated_maxwellian(grid: GridSpec, eps: float, k0: int = 1) -> PhaseSpectrum:
    x1 = grid.x_mesh()[0]
    return to_spectral(maxwellian(grid) * (1.0 + eps * np.cos(k0 * x1)), grid)


# -- transport oracle ------------------------------------------------------------
def free_transport_oracle(grid: GridSpec, eps: float, t: float) -> np.ndarray:
    """``f_hat_k(t, eta) = f_hat^0_k(eta + k t)`` for the modulated Maxwellian.

    The continuous coefficients of ``M(v)(1 + eps cos x)`` are
    ``c_k exp(-eta^2 / 2)`` with ``c_0 = 1`` and ``c_{+-1} = eps / 2``.
    """
    out = np.zeros(grid.shape, dtype=np.complex128)
    eta = grid.eta_mesh()
    k = grid.k_mesh()
    for kk, c in ((0, 1.0), (1, eps / 2), (-1, eps / 2)):
        sel = np.ones(grid.shape, dtype=bool) & (k[0] == kk)
        for i in range(1, grid.dim):
            sel = sel & (k[i] == 0)
        shifted = sum((e + (km * t if i == 0 else 0.0)) ** 2 for i, (e, km) in enumerate(zip(eta, k)))
        out = np.where(sel, c * np.exp(-0.5 * shifted), out)
    return out


def transport_oracle(n_x: int = 33, n_v: int = 128, v_max: float = 8.0, t: float = 2.0, dt: float = 0.05,
                     eps: float = 0.1) -> SuiteReport:
    grid = GridSpec(1, n_x, n_v, v_max)
    spec = modulated_maxwellian(grid, eps)
    policy = StepPolicy(dt=dt, t_end=t)
    out = evolve(spec, policy, PotentialSpec(kind="off"))
    err = float(np.max(np.abs(out.coeffs - free_transport_oracle(grid, eps, t))))
    rho1 = density(out)[1]
    rho_err = abs(rho1 - 0.5 * eps * math.exp(-t * t / 2))
    rep = SuiteReport("transport_oracle")
    rep.checks.append(Check(f"max |f_hat - f_hat0(eta + k t)| at t={t:g}", err, 1e-10))
    rep.checks.append(Check("|rho_hat_1(t) - (eps/2) exp(-t^2/2)|", rho_err, 1e-10))
    return rep


# -- conservation -----------------------------------------------------------------
def conservation(n_x: int = 33, n_v: int = 128, v_max: float = 8.0, t_end: float = 10.0, dt: float = 0.05,
                 eps: float = 0.05, scheme: str = "strang_split") -> SuiteReport:
    grid = GridSpec(1, n_x, n_v, v_max)
    spec = modulated_maxwellian(grid, eps)
    policy = StepPolicy(dt=dt, t_end=t_end, scheme=scheme)
    pot = PotentialSpec()
    ledger = ConservationLedger.start(spec)
    for _ in range(policy.n_steps):
        spec = step(spec, policy, pot)
        ledger.observe(spec)
    rep = SuiteReport("conservation")
    rep.checks.append(Check("max mass drift", ledger.max_mass_drift, 1e-10))
    rep.checks.append(Check("max relative L2 drift", ledger.max_l2_drift, 1e-8))
    rep.checks.append(Check("max realness residue", ledger.max_realness, 1e-12))
    rep.details = {"field_energy_mode1": float(abs(density(spec)[1]))}
    return rep


# -- energy identity -------------------------------------------------------------
@dataclass(frozen=True)
class IdentitySeries:
    dt: float
    rel_residual: np.ndarray
    residual: np.ndarray

    @property
    def max_rel(self) -> float:
        return float(np.max(self.rel_residual))

    @property
    def mean_rel(self) -> float:
        return float(np.mean(self.rel_residual))


def identity_series(dt: float, t_end: float = 0.4, eps: float = 1e-2, n_x: int = 17, n_v: int = 64,
                    v_max: float = 8.0, params: GevreyParams = GevreyParams(0.1, 1.0, 1.0, 1),
                    scheme: str = "strang_split") -> IdentitySeries:
    """Per-step identity residuals of a 1-D Landau run, driven exactly as in a scenario run."""
    grid = GridSpec(1, n_x, n_v, v_max)
    spec = modulated_maxwellian(grid, eps)
    policy = StepPolicy(dt=dt, t_end=t_end, scheme=scheme)
    stepper = IdentityStepper(policy, PotentialSpec(), params)
    tracker = RadiusTracker(RadiusState.initial(params.lam))
    norms = stepper.norms(spec, tracker.state.lam)
    rel, res = [], []
    for n in range(policy.n_steps):
        out = stepper.advance(spec, norms, tracker, (n + 1) * dt)
        spec, norms = out.spectrum, out.norms
        rel.append(out.energy.rel_residual)
        res.append(out.energy.residual)
    return IdentitySeries(dt=dt, rel_residual=np.array(rel), residual=np.array(res))


def observed_orders(values) -> list:
    v = np.asarray(values, dtype=float)
    return [float(np.log2(a / b)) for a, b in zip(v[:-1], v[1:])]


def energy_identity(dts=(4e-3, 2e-3, 1e-3), t_end: float = 0.4, eps: float = 1e-2) -> SuiteReport:
    """Refinement study of the identity residual.

    The order is measured on the window mean of the relative residual; the
    largest single-step residual sits at the first step, whose centre
    ``dt/2`` moves with ``dt``, so its ratios carry an ``O(dt)`` location
    bias and are reported as a note only.
    """
    series = [identity_series(dt, t_end, eps) for dt in dts]
    means = [s.mean_rel for s in series]
    maxes = [s.max_rel for s in series]
    rep = SuiteReport("energy_identity")
    for (a, b), p in zip(zip(dts[:-1], dts[1:]), observed_orders(means)):
        rep.checks.append(Check(f"observed order, dt {a:g} -> {b:g}", p, 2.0, op=">="))
    rep.checks.append(Check(f"max relative residual at dt={dts[-1]:g}", maxes[-1], 1e-4))
    rep.notes.append("window-mean relative residual: " + ", ".join(f"{m:.3e}" for m in means))
    rep.notes.append("max relative residual: " + ", ".join(f"{m:.3e}" for m in maxes)
                     + " (orders " + ", ".join(f"{p:.3f}" for p in observed_orders(maxes)) + ")")
    rep.details = {"dts": list(dts), "mean_rel": means, "max_rel": maxes}
    return rep


# -- inequalities ----------------------------------------------------------------
def inequalities(size: int = 1000, scalar_samples: int = 100_000, seed: int = 0,
                 report_path=None) -> SuiteReport:
    reports, scalar = lab.run_all(lab.Corpus(seed=seed, size=size), scalar_samples)
    if report_path is not None:
        Path(report_path).parent.mkdir(parents=True, exist_ok=True)
        lab.write_report(report_path, reports)
    rep = SuiteReport("inequalities")
    for r in reports.values():
        ratio = 0.0 if r.c_full == 0 else (r.c_full / r.c_half if r.c_half > 0 else math.inf)
        rep.checks.append(Check(f"{r.name}: C(2N)/C(N)", ratio, 2.0, op="<="))
        rep.checks.append(Check(f"{r.name}: fitted C(2N)", r.c_full, math.inf))
    for name, v in scalar.violations.items():
        rep.checks.append(Check(f"scalar {name}: violations", v, 1))
    for name, c in scalar.fitted.items():
        half = scalar.fitted_half[name]
        rep.checks.append(Check(f"scalar {name}: C(2N)/C(N)", c / half, 2.0, op="<="))
    rep.notes.append(lab.summary_table(reports, scalar).replace("\n", "\n  "))
    rep.details = {"reports": reports, "scalar": scalar}
    return rep


def run_suite(name: str, **kwargs) -> SuiteReport:
    table = {"inequalities": inequalities, "energy_identity": energy_identity,
             "transport_oracle": transport_oracle, "conservation": conservation}
    if name not in table:
        raise ValidationError(f"unknown suite {name!r}; expected one of {SUITES} or 'all'")
    return table[name](**kwargs)
