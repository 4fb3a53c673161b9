"""Time stepping: Strang splitting with exact substeps, or classical RK4.

Free streaming is the phase ``exp(-i k.v dt)`` in the mixed ``(k, v)``
representation, and acceleration with a frozen force is the phase
``exp(-i F(x).eta dt)`` in the mixed ``(x, eta)`` representation.  Both are
unimodular, so the Strang step is unitary up to the unpaired eta node, where
the acceleration phase is replaced by its real part to keep the field real.

The acceleration substep leaves ``f_hat_k(0)`` untouched, so the force computed
after the first half transport is exactly the mid-step force.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ForceField, PotentialSpec, force_of, rhs
from .errors import CFLViolation, ValidationError
from .phase_space import PhaseSpectrum, from_kv, from_xeta, symmetry_residual, to_kv, to_xeta

SCHEMES = ("strang_split", "rk4_direct")
RK4_IMAG_LIMIT = 2.0 * np.sqrt(2.0)  # RK4 stability interval on the imaginary axis


@dataclass(frozen=True)
class StepPolicy:
    """Fixed time step, scheme and CFL guard ``max|F| dt / dv <= cfl_guard``."""

    dt: float
    t_end: float
    scheme: str = "strang_split"
    cfl_guard: float = 1.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValidationError(f"t_end must be non-negative, got {self.t_end}")
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not 0 < self.cfl_guard <= 1:
            raise ValidationError(f"cfl_guard must lie in (0, 1], got {self.cfl_guard}")
        n = self.t_end / self.dt
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValidationError(f"t_end={self.t_end} is not an integer multiple of dt={self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def with_dt(self, dt: float) -> "StepPolicy":
        return StepPolicy(dt=dt, t_end=self.t_end, scheme=self.scheme, cfl_guard=self.cfl_guard)


def free_streaming_exact(spec: PhaseSpectrum, dt: float) -> PhaseSpectrum:
    """Exact solution of ``d_t f + v.grad_x f = 0`` over ``dt``."""
    if dt == 0:
        return spec
    grid = spec.grid
    kv = sum(km * vm for km, vm in zip(grid.k_mesh(), grid.v_mesh()))
    g = to_kv(spec.coeffs, grid) * np.exp(-1j * dt * kv)
    return spec.replace(from_kv(g, grid))


def acceleration_phase(force: ForceField, grid, dt: float) -> np.ndarray:
    """``exp(-i F(x).eta dt)`` on the ``(x, eta)`` grid, real at the unpaired eta node."""
    expand = (Ellipsis,) + (None,) * grid.dim
    ny = grid.nyquist_index
    phase = np.ones(grid.shape, dtype=np.complex128)
    for i, eta in enumerate(grid.eta_mesh()):
        arg = force.physical[i][expand] * eta * dt
        factor = np.exp(-1j * arg)
        sel = [slice(None)] * (2 * grid.dim)
        sel[grid.dim + i] = slice(ny, ny + 1)
        factor[tuple(sel)] = np.cos(arg[tuple(sel)])
        phase = phase * factor
    return phase


def acceleration_exact(spec: PhaseSpectrum, force: ForceField, dt: float) -> PhaseSpectrum:
    """Exact solution of ``d_t f + F.grad_v f = 0`` over ``dt`` with ``F`` frozen."""
    if dt == 0 or not np.any(force.physical):
        return spec
    grid = spec.grid
    g = to_xeta(spec.coeffs, grid) * acceleration_phase(force, grid, dt)
    return spec.replace(from_xeta(g, grid))


def cfl_number(force: ForceField, dt: float, dv: float) -> float:
    return force.max_abs() * dt / dv


def _check_cfl(force: ForceField, policy: StepPolicy, dt: float, dv: float):
    c = cfl_number(force, dt, dv)
    if c > policy.cfl_guard:
        raise CFLViolation(f"CFL number max|F| dt/dv = {c:.3g} exceeds guard {policy.cfl_guard}")


def strang_step(spec: PhaseSpectrum, dt: float, pot: PotentialSpec, policy: StepPolicy | None = None):
    half = free_streaming_exact(spec, dt / 2)
    if pot.kind == "off":
        return free_streaming_exact(half, dt / 2)
    F = force_of(half, pot)
    if policy is not None:
        _check_cfl(F, policy, dt, spec.grid.dv)
    return free_streaming_exact(acceleration_exact(half, F, dt), dt / 2)


def rk4_step(spec: PhaseSpectrum, dt: float, pot: PotentialSpec, policy: StepPolicy | None = None):
    if policy is not None:
        grid = spec.grid
        stiff = dt * grid.dim * grid.K * grid.v_max
        if stiff > RK4_IMAG_LIMIT:
            raise CFLViolation(f"rk4 transport stiffness dt*max|k.v| = {stiff:.3g} exceeds {RK4_IMAG_LIMIT:.3f}")
        if pot.kind != "off":
            _check_cfl(force_of(spec, pot), policy, dt, grid.dv)
    k1 = rhs(spec, pot)
    k2 = rhs(spec + k1 * (dt / 2), pot)
    k3 = rhs(spec + k2 * (dt / 2), pot)
    k4 = rhs(spec + k3 * dt, pot)
    return spec + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6)


def step(spec: PhaseSpectrum, policy: StepPolicy, pot: PotentialSpec, dt: float | None = None) -> PhaseSpectrum:
    """Advance one step of ``policy.dt`` (or an explicit ``dt``)."""
    dt = policy.dt if dt is None else dt
    if policy.scheme == "strang_split":
        return strang_step(spec, dt, pot, policy)
    return rk4_step(spec, dt, pot, policy)


def evolve(spec: PhaseSpectrum, policy: StepPolicy, pot: PotentialSpec, n_steps: int | None = None):
    """Advance ``n_steps`` (default: up to ``t_end``) and return the final state."""
    n = policy.n_steps if n_steps is None else n_steps
    for _ in range(n):
        spec = step(spec, policy, pot)
    return spec


@dataclass
class ConservationLedger:
    """Running drifts of mass, L2 norm and realness against the initial state."""

    mass0: float
    l2_0: float
    max_mass_drift: float = 0.0
    max_l2_drift: float = 0.0
    max_realness: float = 0.0

    @classmethod
    def start(cls, spec: PhaseSpectrum) -> "ConservationLedger":
        return cls(mass0=spec.mass(), l2_0=spec.l2_norm(), max_realness=symmetry_residual(spec.coeffs)[0])

    def observe(self, spec: PhaseSpectrum) -> tuple:
        mass_drift = abs(spec.mass() - self.mass0)
        l2_drift = abs(spec.l2_norm() - self.l2_0) / self.l2_0 if self.l2_0 else 0.0
        real = symmetry_residual(spec.coeffs)[0]
        self.max_mass_drift = max(self.max_mass_drift, mass_drift)
        self.max_l2_drift = max(self.max_l2_drift, l2_drift)
        self.max_realness = max(self.max_realness, real)
        return mass_drift, l2_drift, real
