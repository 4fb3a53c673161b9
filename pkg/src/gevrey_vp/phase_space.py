r"""Discretized phase space and the (x, v) <-> (k, eta) transform.

Conventions
-----------
The spatial torus is :math:`[0, 2\pi)^d` sampled at ``n_x`` points per axis
(``n_x = 2K + 1`` is odd, so there is no spatial Nyquist mode).  Velocities
live on the periodic box :math:`[-v_{max}, v_{max})^d` sampled at ``n_v``
points per axis with spacing ``dv = 2 v_max / n_v``; the dual lattice has
spacing ``deta = pi / v_max``.

The spectral coefficients follow

.. math::

    \hat f_k(\eta) = (2\pi)^{-d} \int e^{-i x\cdot k - i v\cdot\eta} f \,dx\,dv,

with the integrals replaced by Riemann sums on the grid.  The discrete forward
map is therefore ``coeffs = dv**d / n_x**d * (-1)**j * fftn(field)`` where
``j`` is the integer eta index, and the inverse is exact.  With this scaling

* a constant field ``c`` has ``coeffs[0, 0] = c * (2 v_max)**d`` (its
  velocity integral), and
* Parseval reads ``sum |f|^2 dx dv = deta**d * sum |coeffs|^2``.

Arrays have shape ``(n_x,)*d + (n_v,)*d``: the first ``d`` axes carry ``k``
and the last ``d`` carry ``eta`` (or ``v`` in mixed representations).  Both
are stored in FFT-standard order, row-major.

Velocity weights: :func:`velocity_weight` returns the spectrum of
``v**alpha * f``.  The eta-derivative ``D^alpha_eta f_hat`` equals the spectrum
of ``(-i v)**alpha * f``, i.e. ``(-i)**|alpha|`` times the weighted spectrum;
:func:`eta_derivative` applies that factor.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import SymmetryError, ValidationError

__all__ = [
    "GridSpec",
    "PhaseSpectrum",
    "VelocityWeightPlan",
    "multi_indices",
    "to_physical",
    "to_spectral",
    "velocity_weight",
    "eta_derivative",
    "symmetry_residual",
]

SYMMETRY_TOL = 1e-12


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value).limit_denominator(1000)


@dataclass(frozen=True)
class GridSpec:
    """Truncated (k, eta) lattice and its physical (x, v) grid.

    Parameters
    ----------
    dim:
        Phase-space half dimension ``d`` (1, 2 or 3).
    n_x:
        Spatial modes per axis, odd: ``k`` runs over ``-K..K``.
    n_v:
        Velocity nodes per axis, even and at least 8.
    v_max:
        Half width of the periodic velocity box.
    dealias_fraction:
        Fraction of ``K`` kept by the dealiasing filter; ``2/3`` removes all
        aliasing from quadratic products.
    """

    dim: int
    n_x: int
    n_v: int
    v_max: float
    dealias_fraction: Fraction = Fraction(2, 3)

    def __post_init__(self):
        object.__setattr__(self, "dealias_fraction", _as_fraction(self.dealias_fraction))
        object.__setattr__(self, "v_max", float(self.v_max))
        if self.dim not in (1, 2, 3):
            raise ValidationError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.n_x < 1 or self.n_x % 2 == 0:
            raise ValidationError(f"n_x must be a positive odd integer, got {self.n_x}")
        if self.n_v < 8 or self.n_v % 2:
            raise ValidationError(f"n_v must be even and >= 8, got {self.n_v}")
        if not self.v_max > 0:
            raise ValidationError(f"v_max must be positive, got {self.v_max}")
        if not 0 < self.dealias_fraction <= 1:
            raise ValidationError(f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}")

    # -- scalar geometry ---------------------------------------------------
    @property
    def K(self) -> int:
        return (self.n_x - 1) // 2

    @property
    def k_keep(self) -> int:
        """Largest |k_i| retained by the dealiasing filter."""
        return int(self.dealias_fraction * self.K)

    @property
    def dx(self) -> float:
        return 2 * np.pi / self.n_x

    @property
    def dv(self) -> float:
        return 2 * self.v_max / self.n_v

    @property
    def deta(self) -> float:
        return np.pi / self.v_max

    @property
    def shape(self) -> tuple:
        return (self.n_x,) * self.dim + (self.n_v,) * self.dim

    @property
    def spatial_shape(self) -> tuple:
        return (self.n_x,) * self.dim

    @property
    def x_axes(self) -> tuple:
        return tuple(range(self.dim))

    @property
    def v_axes(self) -> tuple:
        return tuple(range(self.dim, 2 * self.dim))

    # -- 1-D node sets -----------------------------------------------------
    @cached_property
    def k1d(self) -> np.ndarray:
        return np.rint(np.fft.fftfreq(self.n_x) * self.n_x).astype(np.int64)

    @cached_property
    def eta_index1d(self) -> np.ndarray:
        return np.rint(np.fft.fftfreq(self.n_v) * self.n_v).astype(np.int64)

    @cached_property
    def eta1d(self) -> np.ndarray:
        return self.eta_index1d * self.deta

    @cached_property
    def x1d(self) -> np.ndarray:
        return np.arange(self.n_x) * self.dx

    @cached_property
    def v1d(self) -> np.ndarray:
        return -self.v_max + np.arange(self.n_v) * self.dv

    @property
    def nyquist_index(self) -> int:
        """Storage index of the unpaired eta node ``-(n_v/2) deta``."""
        return self.n_v // 2

    # -- broadcastable meshes ----------------------------------------------
    def _axis_view(self, values, axis, ndim):
        shape = [1] * ndim
        shape[axis] = values.size
        return values.reshape(shape)

    def k_mesh(self, spatial_only=False):
        """Tuple of ``d`` integer arrays broadcastable to the full (or spatial) shape."""
        ndim = self.dim if spatial_only else 2 * self.dim
        return tuple(self._axis_view(self.k1d, i, ndim) for i in range(self.dim))

    def eta_mesh(self, drop_nyquist: bool = False):
        eta = self.eta1d
        if drop_nyquist:
            eta = eta.copy()
            eta[self.nyquist_index] = 0.0
        return tuple(self._axis_view(eta, self.dim + i, 2 * self.dim) for i in range(self.dim))

    def v_mesh(self):
        return tuple(self._axis_view(self.v1d, self.dim + i, 2 * self.dim) for i in range(self.dim))

    def x_mesh(self, spatial_only=False):
        ndim = self.dim if spatial_only else 2 * self.dim
        return tuple(self._axis_view(self.x1d, i, ndim) for i in range(self.dim))

    @cached_property
    def eta_sign(self) -> np.ndarray:
        """``(-1)**sum(j)`` over eta indices, broadcastable to ``shape``."""
        s1 = np.where(np.arange(self.n_v) % 2 == 0, 1.0, -1.0)
        out = np.ones((1,) * self.dim + (1,) * self.dim)
        for i in range(self.dim):
            out = out * self._axis_view(s1, self.dim + i, 2 * self.dim)
        return out

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean mask over k (spatial shape) of retained modes."""
        mask = np.ones(self.spatial_shape, dtype=bool)
        for km in self.k_mesh(spatial_only=True):
            mask = mask & (np.abs(km) <= self.k_keep)
        return mask

    def eta_zero_index(self) -> tuple:
        """Index tuple selecting eta = 0 for every k."""
        return (slice(None),) * self.dim + (0,) * self.dim

    def mode_index(self, k, eta_index) -> tuple:
        """Storage index of the lattice point (k, eta_index * deta)."""
        k = np.atleast_1d(k)
        e = np.atleast_1d(eta_index)
        return tuple(int(ki) % self.n_x for ki in k) + tuple(int(ei) % self.n_v for ei in e)


def flip(arr: np.ndarray, axes) -> np.ndarray:
    """Return ``arr`` evaluated at negated indices along ``axes`` (FFT order)."""
    out = arr
    for ax in axes:
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def symmetry_residual(coeffs: np.ndarray, axes=None) -> tuple:
    """Relative conjugate-symmetry defect and the worst index.

    Returns ``(residual, index)`` where ``residual`` is
    ``max |c - conj(c[-idx])| / max |c|`` (0 for the zero array).
    """
    if axes is None:
        axes = tuple(range(coeffs.ndim))
    defect = np.abs(coeffs - np.conj(flip(coeffs, axes)))
    scale = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    if scale == 0.0:
        return 0.0, None
    idx = np.unravel_index(int(np.argmax(defect)), defect.shape)
    return float(defect[idx] / scale), tuple(int(i) for i in idx)


@dataclass(frozen=True, eq=False)
class PhaseSpectrum:
    """Immutable distribution coefficients ``f_hat_k(eta)`` on a grid."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        arr = self.coeffs
        if not (isinstance(arr, np.ndarray) and arr.dtype == np.complex128
                and not arr.flags.writeable and arr.flags.c_contiguous):
            arr = np.array(arr, dtype=np.complex128, order="C", copy=True)
            arr.flags.writeable = False
        if arr.shape != self.grid.shape:
            raise ValidationError(f"coefficient shape {arr.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def wrap(cls, grid: GridSpec, arr: np.ndarray) -> "PhaseSpectrum":
        """Take ownership of a freshly computed array without copying."""
        arr = np.ascontiguousarray(arr, dtype=np.complex128)
        arr.flags.writeable = False
        return cls(grid, arr)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "PhaseSpectrum":
        return cls.wrap(grid, np.zeros(grid.shape, dtype=np.complex128))

    def replace(self, arr: np.ndarray) -> "PhaseSpectrum":
        return PhaseSpectrum.wrap(self.grid, arr)

    def __add__(self, other):
        return self.replace(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self.replace(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return self.replace(self.coeffs * scalar)

    __rmul__ = __mul__

    def symmetry_residual(self):
        return symmetry_residual(self.coeffs)

    def validate(self, tol: float = SYMMETRY_TOL) -> "PhaseSpectrum":
        """Raise unless finite and conjugate-symmetric within ``tol``."""
        if not np.all(np.isfinite(self.coeffs)):
            bad = np.argwhere(~np.isfinite(self.coeffs))[0]
            raise ValidationError(f"non-finite coefficient at index {tuple(int(i) for i in bad)}")
        res, idx = self.symmetry_residual()
        if res > tol:
            raise SymmetryError(
                f"spectrum is not conjugate-symmetric: residual {res:.3e} at index {idx}",
                index=idx, residual=res)
        return self

    def mass(self) -> float:
        """Total mass ``(2 pi)**d * f_hat_0(0)`` (real part)."""
        return float((2 * np.pi) ** self.grid.dim * self.coeffs[(0,) * (2 * self.grid.dim)].real)

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.deta ** self.grid.dim * np.sum(np.abs(self.coeffs) ** 2)))


# ---------------------------------------------------------------------------
# Transforms between representations.  Each pair is exactly inverse.
# ---------------------------------------------------------------------------

def to_spectral(field: np.ndarray, grid: GridSpec) -> PhaseSpectrum:
    """Spectrum of a real field sampled on the (x, v) grid."""
    field = np.asarray(field)
    if field.shape != grid.shape:
        raise ValidationError(f"field shape {field.shape} does not match grid {grid.shape}")
    scale = (grid.dv / grid.n_x) ** grid.dim
    return PhaseSpectrum.wrap(grid, scale * grid.eta_sign * np.fft.fftn(field))


def to_physical(spec: PhaseSpectrum, check: bool = True) -> np.ndarray:
    """Real field on the (x, v) grid; raises :class:`SymmetryError` for non-real spectra."""
    if check:
        spec.validate()
    grid = spec.grid
    scale = (grid.n_x / grid.dv) ** grid.dim
    return np.real(np.fft.ifftn(spec.coeffs * grid.eta_sign)) * scale


def to_kv(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Mixed representation: spatial Fourier coefficient ``f_k(v)``."""
    return np.fft.ifftn(coeffs * grid.eta_sign, axes=grid.v_axes) / grid.dv ** grid.dim


def from_kv(g: np.ndarray, grid: GridSpec) -> np.ndarray:
    return grid.dv ** grid.dim * grid.eta_sign * np.fft.fftn(g, axes=grid.v_axes)


def to_xeta(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Mixed representation: ``sum_k f_hat_k(eta) e^{ikx}`` on the x grid."""
    return np.fft.ifftn(coeffs, axes=grid.x_axes) * grid.n_x ** grid.dim


def from_xeta(g: np.ndarray, grid: GridSpec) -> np.ndarray:
    return np.fft.fftn(g, axes=grid.x_axes) / grid.n_x ** grid.dim


# ---------------------------------------------------------------------------
# Velocity weights
# ---------------------------------------------------------------------------

def multi_indices(dim: int, order: int) -> list:
    """All multi-indices with ``|alpha| <= order`` in graded-lexicographic order."""
    out = []
    for deg in range(order + 1):
        level = [a for a in itertools.product(range(deg + 1), repeat=dim) if sum(a) == deg]
        out.extend(sorted(level, reverse=True))
    return out


@dataclass(frozen=True)
class VelocityWeightPlan:
    """Velocity moment order ``M`` and its enumerated multi-indices."""

    M: int
    dim: int

    def __post_init__(self):
        if self.M < 0 or 2 * self.M <= self.dim:
            raise ValidationError(f"weight order must satisfy M > d/2 (M={self.M}, d={self.dim})")

    @property
    def alphas(self) -> list:
        return multi_indices(self.dim, self.M)


def _velocity_power(grid: GridSpec, alpha, factor=1.0):
    w = 1.0
    for vi, a in zip(grid.v_mesh(), alpha):
        if a:
            w = w * (factor * vi) ** a
    return w


def velocity_weight(spec: PhaseSpectrum, alpha, plan: VelocityWeightPlan | None = None) -> PhaseSpectrum:
    """Spectrum of ``v**alpha * f`` (pointwise weighting on the velocity grid)."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != spec.grid.dim or min(alpha) < 0:
        raise ValidationError(f"bad multi-index {alpha} for dim {spec.grid.dim}")
    if plan is not None and sum(alpha) > plan.M:
        raise ValidationError(f"|alpha| = {sum(alpha)} exceeds plan order M = {plan.M}")
    if sum(alpha) == 0:
        return spec
    grid = spec.grid
    g = to_kv(spec.coeffs, grid) * _velocity_power(grid, alpha)
    return PhaseSpectrum.wrap(grid, from_kv(g, grid))


def eta_derivative(spec: PhaseSpectrum, alpha) -> np.ndarray:
    """``D^alpha_eta f_hat`` as a raw coefficient array."""
    alpha = tuple(int(a) for a in alpha)
    if sum(alpha) == 0:
        return spec.coeffs
    grid = spec.grid
    g = to_kv(spec.coeffs, grid) * _velocity_power(grid, alpha, factor=-1j)
    return from_kv(g, grid)


def moment_spectra(spec: PhaseSpectrum, M: int) -> dict:
    """``{alpha: D^alpha_eta f_hat}`` for every ``|alpha| <= M`` (one shared transform)."""
    grid = spec.grid
    alphas = multi_indices(grid.dim, M)
    out = {}
    g = None
    for alpha in alphas:
        if sum(alpha) == 0:
            out[alpha] = spec.coeffs
            continue
        if g is None:
            g = to_kv(spec.coeffs, grid)
        out[alpha] = from_kv(g * _velocity_power(grid, alpha, factor=-1j), grid)
    return out
