r"""Right-hand side of Vlasov-Poisson in Fourier variables.

.. math::

    \partial_t \hat f_k(\eta) = k\cdot\nabla_\eta \hat f_k(\eta)
        - \sum_{l \ne 0} \hat\rho_l \widehat W(l)\, l\cdot\eta\, \hat f_{k-l}(\eta)

with :math:`\hat\rho_k = \hat f_k(0)` and :math:`\widehat W(l) = \pm c_W/|l|^2`.
Setting :math:`\widehat W(0) = 0` removes the neutralising background, so the
force is mean-free.  The force field is
:math:`\hat F_l = -i\, l\, \widehat W(l)\, \hat\rho_l`, hence
:math:`\hat\rho_l \widehat W(l)\, l_j = i \hat F_{l,j}` and the convolution is
computed as a pointwise product :math:`i F(x)\cdot\eta\,\tilde f(x,\eta)` on
the spatial grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .phase_space import GridSpec, PhaseSpectrum, from_kv, from_xeta, to_kv, to_xeta, symmetry_residual

POTENTIAL_KINDS = ("coulomb_repulsive", "newtonian_attractive", "off")


@dataclass(frozen=True)
class PotentialSpec:
    kind: str = "coulomb_repulsive"
    c_w: float = 1.0

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ValidationError(f"unknown potential kind {self.kind!r}; expected one of {POTENTIAL_KINDS}")
        if not self.c_w > 0:
            raise ValidationError(f"c_w must be positive, got {self.c_w}")

    @property
    def sign(self) -> float:
        return {"coulomb_repulsive": 1.0, "newtonian_attractive": -1.0, "off": 0.0}[self.kind]

    def multiplier(self, grid: GridSpec) -> np.ndarray:
        """``W_hat(k)`` over the spatial lattice (zero at ``k = 0``)."""
        k2 = sum(km.astype(float) ** 2 for km in grid.k_mesh(spatial_only=True))
        k2 = np.broadcast_to(k2, grid.spatial_shape)
        w = np.zeros(grid.spatial_shape)
        nz = k2 > 0
        w[nz] = self.sign * self.c_w / k2[nz]
        return w


@dataclass(frozen=True)
class DynamicsConfig:
    """Everything the right-hand side needs besides the state."""

    grid: GridSpec
    potential: PotentialSpec
    dealias: bool = True


@dataclass(frozen=True, eq=False)
class ForceField:
    fourier: np.ndarray   # (d,) + spatial_shape, complex
    physical: np.ndarray  # (d,) + spatial_shape, real

    def max_abs(self) -> float:
        return float(np.max(np.sqrt(np.sum(self.physical ** 2, axis=0))))


def density(spec: PhaseSpectrum) -> np.ndarray:
    """``rho_hat_k = f_hat_k(0)``; ``rho_hat_0`` is the mass over ``(2 pi)**d``."""
    return np.array(spec.coeffs[spec.grid.eta_zero_index()])


def force(rho: np.ndarray, pot: PotentialSpec, grid: GridSpec) -> ForceField:
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != grid.spatial_shape:
        raise ValidationError(f"density shape {rho.shape} does not match {grid.spatial_shape}")
    w = pot.multiplier(grid) * rho
    fourier = np.stack([-1j * km * w for km in grid.k_mesh(spatial_only=True)])
    phys = np.fft.ifftn(fourier, axes=tuple(range(1, grid.dim + 1))) * grid.n_x ** grid.dim
    return ForceField(fourier=fourier, physical=np.ascontiguousarray(phys.real))


def force_of(spec: PhaseSpectrum, pot: PotentialSpec) -> ForceField:
    return force(density(spec), pot, spec.grid)


def transport_term(spec: PhaseSpectrum) -> PhaseSpectrum:
    """``+k . grad_eta f_hat``: the spectrum of ``-v . grad_x f``."""
    grid = spec.grid
    g = to_kv(spec.coeffs, grid)
    kv = sum(km * vm for km, vm in zip(grid.k_mesh(), grid.v_mesh()))
    return PhaseSpectrum.wrap(grid, from_kv(-1j * kv * g, grid))


def _mask_k(arr: np.ndarray, grid: GridSpec) -> np.ndarray:
    mask = grid.dealias_mask.reshape(grid.spatial_shape + (1,) * (arr.ndim - grid.dim))
    return np.where(mask, arr, 0)


def force_convolution(coeffs: np.ndarray, rho: np.ndarray, pot: PotentialSpec, grid: GridSpec,
                      component: int | None = None, dealias: bool = True) -> np.ndarray:
    """Truncated convolution ``sum_l rho_l W(l) m(l, eta) g_{k-l}(eta)``.

    ``m = l . eta`` when ``component`` is None, else ``m = l_component``.
    With ``dealias`` the inputs and output are restricted to ``|k_i| <= k_keep``;
    for ``dealias_fraction <= 2/3`` the pseudo-spectral product is then exact.
    """
    if dealias and grid.k_keep < grid.K:
        coeffs = _mask_k(coeffs, grid)
        rho = _mask_k(rho, grid)
    F = force(rho, pot, grid).physical
    g = to_xeta(coeffs, grid)
    expand = (Ellipsis,) + (None,) * grid.dim
    if component is None:
        # the unpaired eta node has no conjugate partner, so its multiplier is zero
        weight = sum(F[i][expand] * eta for i, eta in enumerate(grid.eta_mesh(drop_nyquist=True)))
    else:
        weight = F[component][expand]
    out = from_xeta(1j * weight * g, grid)
    if dealias and grid.k_keep < grid.K:
        out = _mask_k(out, grid)
    return out


def nonlinear_term(spec: PhaseSpectrum, rho=None, pot: PotentialSpec | None = None,
                   dealias: bool = True) -> PhaseSpectrum:
    """``sum_{l != 0} rho_l W(l) l.eta f_hat_{k-l}(eta)`` (enters the RHS with a minus sign)."""
    pot = pot or PotentialSpec()
    if rho is None:
        rho = density(spec)
    if pot.kind == "off":
        return PhaseSpectrum.zeros(spec.grid)
    return PhaseSpectrum.wrap(spec.grid, force_convolution(spec.coeffs, rho, pot, spec.grid, dealias=dealias))


def rhs(spec: PhaseSpectrum, pot: PotentialSpec, dealias: bool = True) -> PhaseSpectrum:
    """``d f_hat / dt``; the result is validated (finite, conjugate-symmetric)."""
    out = transport_term(spec) - nonlinear_term(spec, density(spec), pot, dealias=dealias)
    return out.validate(tol=1e-10)


def realness_residual(spec: PhaseSpectrum) -> float:
    return symmetry_residual(spec.coeffs)[0]
