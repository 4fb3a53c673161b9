"""Shared fixtures and independent oracles for the test suite."""
import itertools
import math

import numpy as np
import pytest

from gevrey_vp.phase_space import GridSpec, PhaseSpectrum, to_spectral
from gevrey_vp.scenario import maxwellian


def modulated(grid, eps=0.1, k0=1):
    """``M(v) (1 + eps cos(k0 x_1))`` as a spectrum."""
    x1 = grid.x_mesh()[0]
    return to_spectral(maxwellian(grid) * (1.0 + eps * np.cos(k0 * x1)), grid)


def random_real_spectrum(rng, grid, decay=2.0):
    """Smooth random real field, velocity-localised, as a spectrum."""
    f = rng.standard_normal(grid.shape)
    spec = to_spectral(f, grid)
    br = np.sqrt(1.0 + sum(k.astype(float) ** 2 for k in grid.k_mesh()) + sum(e ** 2 for e in grid.eta_mesh()))
    return spec.replace(spec.coeffs * br ** (-decay))


def direct_convolution(coeffs, rho, pot, grid, component=None, dealias=True):
    """Loop-based ``sum_l rho_l W(l) m(l, eta) g_{k-l}(eta)``.

    The unpaired eta node carries a zero multiplier, matching the library's
    convention for real spectra.  With ``dealias`` every wavenumber involved is
    restricted to ``|k_i| <= k_keep``.
    """
    d = grid.dim
    keep = grid.k_keep if dealias else grid.K
    w = pot.multiplier(grid)
    eta = grid.eta1d.copy()
    eta[grid.nyquist_index] = 0.0
    eta_axes = np.meshgrid(*([eta] * d), indexing="ij")
    out = np.zeros(grid.shape, dtype=complex)
    ks = list(itertools.product(range(-keep, keep + 1), repeat=d))
    for k in ks:
        for l in ks:
            m = tuple(a - b for a, b in zip(k, l))
            if all(v == 0 for v in l) or any(abs(v) > keep for v in m):
                continue
            li = tuple(v % grid.n_x for v in l)
            mi = tuple(v % grid.n_x for v in m)
            ki = tuple(v % grid.n_x for v in k)
            if component is None:
                mult = sum(l[i] * eta_axes[i] for i in range(d))
            else:
                mult = l[component]
            out[ki] += rho[li] * w[li] * mult * coeffs[mi]
    return out


def gaussian_spectrum(grid):
    """Homogeneous Maxwellian with the k != 0 rounding noise removed."""
    spec = to_spectral(maxwellian(grid), grid)
    c = np.zeros(grid.shape, dtype=complex)
    c[(0,) * grid.dim] = spec.coeffs[(0,) * grid.dim]
    return PhaseSpectrum(grid, c)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid1():
    return GridSpec(1, 9, 32, 6.0)


@pytest.fixture
def fine_grid():
    return GridSpec(1, 33, 128, 8.0)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


SQRT2PI = math.sqrt(2 * math.pi)
