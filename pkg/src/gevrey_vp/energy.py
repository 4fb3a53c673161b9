r"""Decomposition of the Gevrey energy derivative.

With ``A = <k,eta>^sigma exp(lam <k,eta>^s)`` and ``u_alpha = D^alpha_eta f_hat``,

.. math::

    \tfrac12 \frac{d}{dt}\|f\|^2_{\lambda,\sigma,M} = CK - E_L - E_{NL},

where ``CK`` comes from the moving radius, ``E_L`` from free transport and
``E_NL = E_NL1 + E_NL2`` from the force.  ``E_NL1`` keeps the derivative on
``f`` and ``E_NL2`` collects the Leibniz terms where one ``eta``-derivative
falls on the multiplier ``l . eta`` (each weighted by ``alpha_j``).

``E_L`` is evaluated after summation by parts in ``eta``:
``sum |u|^2 A (d_{eta_i} A) k_i``.  All eta integrals are lattice Riemann sums.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .dynamics import PotentialSpec, density, force_convolution
from .norms import GevreyParams, bracket_field, gevrey_multiplier, gevrey_norm_from_moments, weight_from_bracket
from .phase_space import PhaseSpectrum, moment_spectra, multi_indices

EPS = 1e-300
NORM_ROUNDOFF = 1e-12  # relative accuracy of one squared-norm evaluation


@dataclass(frozen=True)
class EnergyBreakdown:
    ck: float
    e_l: float
    e_nl1: float
    e_nl2: float
    lhs_fd: float = math.nan
    residual: float = math.nan
    rel_residual: float = math.nan
    imag_residue: float = 0.0
    floor: float = 0.0

    CSV_COLUMNS = ("ck", "e_l", "e_nl1", "e_nl2", "lhs_fd", "residual", "rel_residual")

    @property
    def e_nl(self) -> float:
        return self.e_nl1 + self.e_nl2

    @property
    def scale(self) -> float:
        return max(abs(self.ck), abs(self.e_l), abs(self.e_nl), self.floor, EPS)

    def as_row(self) -> dict:
        data = asdict(self)
        return {c: data[c] for c in self.CSV_COLUMNS}


def _moments(spec, params, moments):
    return moment_spectra(spec, int(params.M)) if moments is None else moments


def compute_ck(spec: PhaseSpectrum, params: GevreyParams, lambda_dot: float, moments=None) -> float:
    """``lambda_dot * ||f||^2_{lam, sigma + s/2, M}``."""
    if lambda_dot == 0:
        return 0.0
    moments = _moments(spec, params, moments)
    shifted = params.with_(sigma=params.sigma + params.s / 2)
    return lambda_dot * gevrey_norm_from_moments(moments, spec.grid, shifted) ** 2


def transport_weight(grid, params: GevreyParams) -> np.ndarray:
    """``A k.grad_eta A = k.eta <k,eta>^{2 sigma - 2} (sigma + lam s <k,eta>^s) e^{2 lam <k,eta>^s}``."""
    br = bracket_field(grid)
    kdot = sum(km * eta for km, eta in zip(grid.k_mesh(), grid.eta_mesh()))
    core = weight_from_bracket(br, 2 * params.lam, 2 * params.sigma - 2, params.s)
    return kdot * core * (params.sigma + params.lam * params.s * br ** params.s)


def compute_el(spec: PhaseSpectrum, params: GevreyParams, moments=None) -> float:
    """Linear (free transport) contribution ``E_L``."""
    grid = spec.grid
    moments = _moments(spec, params, moments)
    w = transport_weight(grid, params)
    total = 0.0
    for alpha in multi_indices(grid.dim, int(params.M)):
        total += float(np.sum(np.abs(moments[alpha]) ** 2 * w))
    return grid.deta ** grid.dim * total


def compute_enl(spec: PhaseSpectrum, rho, pot: PotentialSpec, params: GevreyParams, moments=None,
                dealias: bool = True, with_residue: bool = False):
    """Nonlinear contributions ``(E_NL1, E_NL2)``.

    ``dealias`` must match the scheme being monitored: the Strang step is a
    plain collocation product, RK4 uses the filtered right-hand side.  With
    ``with_residue`` the largest relative imaginary part of the two sums is
    returned as a third element.
    """
    grid = spec.grid
    if rho is None:
        rho = density(spec)
    if pot.kind == "off":
        return (0.0, 0.0, 0.0) if with_residue else (0.0, 0.0)
    moments = _moments(spec, params, moments)
    A2 = gevrey_multiplier(params, grid).values ** 2
    w = grid.deta ** grid.dim
    s1 = 0j
    s2 = 0j
    for alpha in multi_indices(grid.dim, int(params.M)):
        u = moments[alpha]
        cu = A2 * np.conj(u)
        s1 += np.sum(cu * force_convolution(u, rho, pot, grid, dealias=dealias))
        for j, a in enumerate(alpha):
            if a == 0:
                continue
            lower = tuple(b - (i == j) for i, b in enumerate(alpha))
            s2 += a * np.sum(cu * force_convolution(moments[lower], rho, pot, grid, component=j, dealias=dealias))
    e1, e2 = w * s1, w * s2
    if not with_residue:
        return float(e1.real), float(e2.real)
    residue = max(abs(e1.imag) / max(abs(e1), EPS), abs(e2.imag) / max(abs(e2), EPS))
    return float(e1.real), float(e2.real), float(residue)


def energy_breakdown(spec: PhaseSpectrum, params: GevreyParams, lambda_dot: float, pot: PotentialSpec,
                     dealias: bool = True) -> EnergyBreakdown:
    """All terms at one state (normally the step midpoint)."""
    moments = moment_spectra(spec, int(params.M))
    e1, e2, res = compute_enl(spec, density(spec), pot, params, moments, dealias=dealias, with_residue=True)
    return EnergyBreakdown(ck=compute_ck(spec, params, lambda_dot, moments),
                           e_l=compute_el(spec, params, moments), e_nl1=e1, e_nl2=e2, imag_residue=res)


def verify_identity(prev_norm: float, next_norm: float, breakdown: EnergyBreakdown, dt: float) -> EnergyBreakdown:
    """Attach the centred difference of ``(1/2)||f||^2`` across a step and the residual.

    ``prev_norm`` and ``next_norm`` are the Gevrey norms at the start and end of
    the step, each with its own radius.  The relative residual divides by the
    largest term, but never by less than the rounding resolution of the
    centred difference, ``NORM_ROUNDOFF * max(||f||^2) / dt``; otherwise a
    state where every term vanishes would report pure rounding as a defect.
    """
    lhs = (next_norm ** 2 - prev_norm ** 2) / (2.0 * dt)
    residual = lhs - (breakdown.ck - breakdown.e_l - breakdown.e_nl)
    floor = NORM_ROUNDOFF * max(prev_norm, next_norm) ** 2 / dt
    out = replace(breakdown, lhs_fd=lhs, residual=residual, floor=floor)
    return replace(out, rel_residual=abs(residual) / out.scale)
