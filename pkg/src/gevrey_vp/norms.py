r"""Japanese bracket, Gevrey multipliers and the norms built from them.

The weighted Gevrey norm is

.. math::

    \|f\|_{\lambda,\sigma,M;s}^2 = \sum_{|\alpha|\le M} \Delta\eta^d
        \sum_{k,\eta} |D^\alpha_\eta \hat f_k(\eta)|^2
        \langle k,\eta\rangle^{2\sigma} e^{2\lambda\langle k,\eta\rangle^s},

i.e. the root of the sum of squared per-alpha seminorms, with the
eta-integral replaced by the lattice Riemann sum.  ``lambda = 0`` gives the
weighted Sobolev norm on the same code path.

``NormReport.CSV_COLUMNS`` fixes the column names used in diagnostics files.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .dynamics import PotentialSpec, density, force
from .errors import RadiusTooLargeError, ValidationError
from .phase_space import GridSpec, PhaseSpectrum, moment_spectra, multi_indices, symmetry_residual

EXPONENT_CAP = 700.0


def japanese_bracket(k, eta) -> float:
    """``(1 + |k|^2 + |eta|^2) ** 0.5`` for scalars or vectors."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    return float(np.sqrt(1.0 + np.sum(k * k) + np.sum(eta * eta)))


@lru_cache(maxsize=32)
def bracket_field(grid: GridSpec) -> np.ndarray:
    """``<k, eta>`` over the full lattice."""
    sq = 1.0
    for km in grid.k_mesh():
        sq = sq + km.astype(float) ** 2
    for em in grid.eta_mesh():
        sq = sq + em ** 2
    out = np.sqrt(np.broadcast_to(sq, grid.shape)).copy()
    out.flags.writeable = False
    return out


@lru_cache(maxsize=32)
def spatial_bracket(grid: GridSpec) -> np.ndarray:
    sq = 1.0
    for km in grid.k_mesh(spatial_only=True):
        sq = sq + km.astype(float) ** 2
    out = np.sqrt(np.broadcast_to(sq, grid.spatial_shape)).copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class GevreyParams:
    """Radius ``lam``, Sobolev correction ``sigma``, Gevrey exponent ``s``, weight ``M``."""

    lam: float
    sigma: float
    s: float = 1.0
    M: int = 1

    def __post_init__(self):
        if not 0 < self.s <= 1:
            raise ValidationError(f"Gevrey exponent s must lie in (0, 1], got {self.s}")
        if not self.lam >= 0:
            raise ValidationError(f"radius must be >= 0, got {self.lam}")
        if not self.sigma >= 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")
        if int(self.M) != self.M or self.M < 0:
            raise ValidationError(f"weight order M must be a non-negative integer, got {self.M}")

    def with_(self, **changes) -> "GevreyParams":
        data = asdict(self)
        data.update(changes)
        return GevreyParams(**data)

    def check_applicability(self, dim: int) -> list:
        """Warn (never reject) when the propagation hypotheses fail."""
        issues = []
        if self.sigma < dim / 2 + 6:
            issues.append(f"sigma={self.sigma} < d/2 + 6 = {dim / 2 + 6}")
        if not 2 * self.M > dim:
            issues.append(f"M={self.M} does not satisfy M > d/2")
        for msg in issues:
            warnings.warn(f"Gevrey parameters outside the propagation hypotheses: {msg}", stacklevel=2)
        return issues


@dataclass(frozen=True, eq=False)
class MultiplierField:
    values: np.ndarray
    params: GevreyParams


def _exponent_guard(lam: float, bracket_max: float, s: float):
    if lam * bracket_max ** s > EXPONENT_CAP:
        raise RadiusTooLargeError(
            f"radius too large for grid: lambda*<k,eta>_max^s = {lam * bracket_max ** s:.1f} > {EXPONENT_CAP}")


def weight_from_bracket(br: np.ndarray, lam: float, sigma: float, s: float) -> np.ndarray:
    """``br**sigma * exp(lam * br**s)``; ``lam = 0`` reduces to ``br**sigma`` exactly."""
    _exponent_guard(lam, float(np.max(br)), s)
    return br ** sigma * np.exp(lam * br ** s)


def gevrey_multiplier(params: GevreyParams, grid: GridSpec) -> MultiplierField:
    vals = weight_from_bracket(bracket_field(grid), params.lam, params.sigma, params.s)
    return MultiplierField(values=vals, params=params)


def _weighted_sum(arrays, weight) -> float:
    total = 0.0
    for u in arrays:
        total += float(np.sum(np.abs(u * weight) ** 2))
    return total


def gevrey_norm_from_moments(moments: dict, grid: GridSpec, params: GevreyParams) -> float:
    A = gevrey_multiplier(params, grid).values
    arrays = [moments[a] for a in multi_indices(grid.dim, int(params.M))]
    return math.sqrt(grid.deta ** grid.dim * _weighted_sum(arrays, A))


def per_alpha_norms(moments: dict, grid: GridSpec, params: GevreyParams) -> dict:
    """``{alpha: ||v^alpha f||_{lam, sigma; s}}``."""
    A = gevrey_multiplier(params, grid).values
    w = grid.deta ** grid.dim
    return {a: math.sqrt(w * float(np.sum(np.abs(u * A) ** 2))) for a, u in moments.items()}


def gevrey_norm(spec: PhaseSpectrum, params: GevreyParams) -> float:
    """``||f||_{lam, sigma, M; s}``."""
    return gevrey_norm_from_moments(moment_spectra(spec, int(params.M)), spec.grid, params)


def sobolev_norm(spec: PhaseSpectrum, sigma: float, M: int) -> float:
    """``||f||_{sigma, M}``: the Gevrey norm at zero radius."""
    return gevrey_norm(spec, GevreyParams(lam=0.0, sigma=sigma, s=1.0, M=M))


def spatial_gevrey_norm(rho: np.ndarray, params: GevreyParams, grid: GridSpec | None = None,
                        check: bool = True) -> float:
    """``||rho||_{lam, sigma; s}`` with multiplier ``<k>^sigma e^{lam <k>^s}``."""
    rho = np.asarray(rho)
    if check:
        res, idx = symmetry_residual(rho)
        if res > 1e-12:
            raise ValidationError(f"density is not conjugate-symmetric (residual {res:.2e} at {idx})")
    if grid is None:
        freqs = [np.fft.fftfreq(n, 1.0 / n) for n in rho.shape]
        br = np.sqrt(1.0 + sum(m ** 2 for m in np.meshgrid(*freqs, indexing="ij")))
    else:
        br = spatial_bracket(grid)
    B = weight_from_bracket(br, params.lam, params.sigma, params.s)
    return math.sqrt(float(np.sum(np.abs(rho * B) ** 2)))


def _spectral_gradient_v(coeffs: np.ndarray, grid: GridSpec) -> list:
    """Physical ``d f / d v_i`` for each axis (the unpaired eta node is dropped)."""
    scale = (grid.n_x / grid.dv) ** grid.dim
    return [np.real(np.fft.ifftn(coeffs * (1j * eta) * grid.eta_sign)) * scale
            for eta in grid.eta_mesh(drop_nyquist=True)]


def gradv_sup(spec: PhaseSpectrum, M: int) -> float:
    """``max_{x,v} sum_{|alpha| <= M} |v^alpha grad_v f|``."""
    grid = spec.grid
    grads = _spectral_gradient_v(spec.coeffs, grid)
    mag = np.sqrt(sum(g * g for g in grads))
    vm = grid.v_mesh()
    total = np.zeros(grid.shape)
    for alpha in multi_indices(grid.dim, M):
        w = 1.0
        for vi, a in zip(vm, alpha):
            if a:
                w = w * np.abs(vi) ** a
        total = total + w * mag
    return float(np.max(total))


def force_w1inf(spec: PhaseSpectrum, pot: PotentialSpec) -> float:
    """``max_x (|F| + |grad_x F|)`` with Euclidean / Frobenius pointwise norms."""
    grid = spec.grid
    ff = force(density(spec), pot, grid)
    axes = tuple(range(1, grid.dim + 1))
    fmag = np.sqrt(np.sum(ff.physical ** 2, axis=0))
    jac_sq = np.zeros(grid.spatial_shape)
    for km in grid.k_mesh(spatial_only=True):
        dF = np.real(np.fft.ifftn(1j * km * ff.fourier, axes=axes)) * grid.n_x ** grid.dim
        jac_sq = jac_sq + np.sum(dF ** 2, axis=0)
    return float(np.max(fmag + np.sqrt(jac_sq)))


def sup_functionals(spec: PhaseSpectrum, M: int, pot: PotentialSpec | None = None) -> tuple:
    """``(||F||_{W^{1,inf}}, ||grad_v f||_{inf, M})`` as grid maxima."""
    pot = pot or PotentialSpec()
    return force_w1inf(spec, pot), gradv_sup(spec, M)


@dataclass(frozen=True)
class NormReport:
    gevrey: float
    sobolev: float
    gevrey_half_shift: float
    spatial_gevrey: float
    force_w1inf: float
    gradv_supM: float

    CSV_COLUMNS = ("gevrey", "sobolev", "gevrey_half_shift", "spatial_gevrey", "force_w1inf", "gradv_supM")

    @property
    def blowup_functional(self) -> float:
        return self.force_w1inf + self.gradv_supM

    def as_row(self) -> dict:
        return {c: getattr(self, c) for c in self.CSV_COLUMNS}


def norm_report(spec: PhaseSpectrum, params: GevreyParams, pot: PotentialSpec | None = None,
                moments: dict | None = None) -> NormReport:
    grid = spec.grid
    if moments is None:
        moments = moment_spectra(spec, int(params.M))
    g = gevrey_norm_from_moments(moments, grid, params)
    sob = gevrey_norm_from_moments(moments, grid, params.with_(lam=0.0))
    half = gevrey_norm_from_moments(moments, grid, params.with_(sigma=params.sigma + params.s / 2))
    rho = density(spec)
    sp = spatial_gevrey_norm(rho, params, grid, check=False)
    fw, gv = sup_functionals(spec, int(params.M), pot)
    return NormReport(gevrey=g, sobolev=sob, gevrey_half_shift=half, spatial_gevrey=sp,
                      force_w1inf=fw, gradv_supM=gv)
