import math

import numpy as np
import pytest

from gevrey_vp.dynamics import PotentialSpec, density
from gevrey_vp.energy import (EnergyBreakdown, compute_ck, compute_el, compute_enl, energy_breakdown,
                              verify_identity)
from gevrey_vp.integrator import free_streaming_exact
from gevrey_vp.norms import GevreyParams, gevrey_norm
from gevrey_vp.phase_space import GridSpec, PhaseSpectrum, moment_spectra, multi_indices, to_spectral
from gevrey_vp.scenario import maxwellian
from gevrey_vp.suites import identity_series

from conftest import direct_convolution, gaussian_spectrum, modulated, random_real_spectrum


def skewed(grid, eps=0.2, shift=1.0):
    """Spatially modulated data with a velocity-shifted, phase-carrying k = +-1 part."""
    x, v = grid.x_mesh()[0], grid.v_mesh()[0]
    f = maxwellian(grid) * (1 + eps * np.cos(x)) + 0.1 * np.exp(-(v - shift) ** 2 / 2) * np.sin(x)
    return to_spectral(f, grid)


def brute_force_el(spec, sigma, M):
    """``sum_alpha sum_{k, eta} sigma k eta <k,eta>^{2 sigma - 2} |D^alpha f_hat|^2 deta`` at zero radius."""
    g = spec.grid
    moments = moment_spectra(spec, M)
    total = 0.0
    for alpha in multi_indices(1, M):
        u = moments[alpha]
        for i, k in enumerate(g.k1d):
            for j, e in enumerate(g.eta1d):
                br2 = 1.0 + k * k + e * e
                total += sigma * k * e * br2 ** (sigma - 1) * abs(u[i, j]) ** 2
    return total * g.deta


class TestCk:
    def test_zero_rate(self, rng):
        assert compute_ck(random_real_spectrum(rng, GridSpec(1, 5, 8, 3.0)), GevreyParams(0.2, 2.0), 0.0) == 0.0

    def test_zero_spectrum(self):
        assert compute_ck(PhaseSpectrum.zeros(GridSpec(1, 5, 8, 3.0)), GevreyParams(0.2, 2.0), -3.0) == 0.0

    def test_shifted_sobolev_index(self, rng):
        spec = random_real_spectrum(rng, GridSpec(1, 9, 16, 4.0))
        p = GevreyParams(0.2, 2.0, 0.5, 1)
        expected = -1.7 * gevrey_norm(spec, p.with_(sigma=2.25)) ** 2
        assert compute_ck(spec, p, -1.7) == pytest.approx(expected, rel=1e-14)


class TestEl:
    def test_spatially_constant_data(self):
        assert compute_el(gaussian_spectrum(GridSpec(1, 9, 64, 8.0)), GevreyParams(0.3, 2.0)) == 0.0

    def test_brute_force_small_grid(self):
        g = GridSpec(1, 9, 16, 4.0)
        for M in (0, 1):
            el = compute_el(skewed(g), GevreyParams(0.0, 1.5, 1.0, M))
            assert el == pytest.approx(brute_force_el(skewed(g), 1.5, M), rel=1e-12)

    def test_sign_follows_eta_offset(self):
        g = GridSpec(1, 9, 16, 4.0)
        eta = g.eta1d
        c = np.zeros(g.shape, dtype=complex)
        c[0] = np.exp(-eta ** 2 / 2)
        # f_hat_1 centred at eta = +1, so k.eta > 0 where the mass sits
        c[1] = 0.1 * np.exp(-(eta - 1) ** 2 / 2)
        c[-1] = 0.1 * np.exp(-(eta + 1) ** 2 / 2)
        el = compute_el(PhaseSpectrum(g, c), GevreyParams(0.0, 1.5, 1.0, 0))
        assert el > 0
        assert el == pytest.approx(brute_force_el(PhaseSpectrum(g, c), 1.5, 0), rel=1e-12)
        c[1], c[-1] = c[-1].copy(), c[1].copy()
        assert compute_el(PhaseSpectrum(g, c), GevreyParams(0.0, 1.5, 1.0, 0)) == pytest.approx(-el, rel=1e-12)

    def test_even_data_has_no_linear_term(self):
        g = GridSpec(1, 9, 64, 8.0)
        spec = modulated(g, 0.3)
        el = compute_el(spec, GevreyParams(0.0, 2.0, 1.0, 1))
        assert abs(el) < 1e-14 * gevrey_norm(spec, GevreyParams(0.0, 2.0, 1.0, 1)) ** 2

    @pytest.mark.parametrize("params", [GevreyParams(0.0, 2.0, 1.0, 1), GevreyParams(0.3, 2.0, 0.5, 1)])
    def test_free_transport_rate(self, params):
        # d/dt ||A f||^2 = -2 E_L along the exact characteristic solution
        g = GridSpec(1, 5, 128, 8.0)
        spec = skewed(g, shift=-1.0)
        h = 1e-4
        plus = gevrey_norm(free_streaming_exact(spec, h), params) ** 2
        minus = gevrey_norm(free_streaming_exact(spec, -h), params) ** 2
        el = compute_el(spec, params)
        assert (plus - minus) / (2 * h) == pytest.approx(-2 * el, rel=1e-7)


class TestEnl:
    def test_homogeneous(self):
        spec = gaussian_spectrum(GridSpec(1, 9, 64, 8.0))
        assert compute_enl(spec, None, PotentialSpec(), GevreyParams(0.3, 2.0)) == (0.0, 0.0)

    def test_no_weight_means_no_second_term(self, rng):
        spec = random_real_spectrum(rng, GridSpec(1, 9, 16, 4.0))
        e1, e2 = compute_enl(spec, None, PotentialSpec(), GevreyParams(0.3, 2.0, 1.0, 0))
        assert e2 == 0.0 and e1 != 0.0

    def test_potential_off(self, rng):
        spec = random_real_spectrum(rng, GridSpec(1, 9, 16, 4.0))
        assert compute_enl(spec, None, PotentialSpec("off"), GevreyParams(0.3, 2.0)) == (0.0, 0.0)

    @pytest.mark.parametrize("dim,n_x", [(1, 9), (2, 5)])
    def test_brute_force_convolution(self, rng, dim, n_x):
        g = GridSpec(dim, n_x, 8, 3.0)
        spec = random_real_spectrum(rng, g, decay=1.0)
        pot = PotentialSpec()
        p = GevreyParams(0.2, 1.5, 1.0, 2 if dim == 2 else 1)
        rho = density(spec)
        moments = moment_spectra(spec, p.M)
        br = np.sqrt(1.0 + sum(k.astype(float) ** 2 for k in g.k_mesh()) + sum(e ** 2 for e in g.eta_mesh()))
        A2 = (br ** p.sigma * np.exp(p.lam * br)) ** 2
        e1 = e2 = 0.0
        for alpha in multi_indices(dim, p.M):
            u = moments[alpha]
            e1 += np.sum(A2 * np.conj(u) * direct_convolution(u, rho, pot, g)).real
            for j in range(dim):
                if alpha[j]:
                    lower = tuple(a - (i == j) for i, a in enumerate(alpha))
                    conv = direct_convolution(moments[lower], rho, pot, g, component=j)
                    e2 += alpha[j] * np.sum(A2 * np.conj(u) * conv).real
        e1 *= g.deta ** dim
        e2 *= g.deta ** dim
        got1, got2 = compute_enl(spec, rho, pot, p)
        assert abs(got1 - e1) < 1e-12 * max(1.0, abs(e1))
        assert abs(got2 - e2) < 1e-12 * max(1.0, abs(e2))


class TestVerifyIdentity:
    def test_stationary_state(self):
        spec = gaussian_spectrum(GridSpec(1, 9, 64, 8.0))
        p = GevreyParams(0.1, 2.0)
        br = energy_breakdown(spec, p, 0.0, PotentialSpec())
        n = gevrey_norm(spec, p)
        out = verify_identity(n, n, br, 0.01)
        assert (out.ck, out.e_l, out.e_nl1, out.e_nl2) == (0.0, 0.0, 0.0, 0.0)
        assert out.residual == 0.0 and out.rel_residual == 0.0

    def test_free_transport_single_wavenumber(self):
        g = GridSpec(1, 5, 128, 8.0)
        x, v = g.x_mesh()[0], g.v_mesh()[0]
        # only k = +-1 and k = 0 present
        spec = to_spectral(maxwellian(g) + 0.2 * np.exp(-(v + 0.5) ** 2 / 2) * np.cos(x), g)
        p = GevreyParams(0.2, 2.0, 1.0, 1)
        dt = 1e-3
        br = energy_breakdown(spec, p, 0.0, PotentialSpec("off"))
        prev = gevrey_norm(free_streaming_exact(spec, -dt / 2), p)
        nxt = gevrey_norm(free_streaming_exact(spec, dt / 2), p)
        out = verify_identity(prev, nxt, br, dt)
        assert out.e_l != 0.0
        assert out.rel_residual < 1e-6

    def test_rel_residual_floor(self):
        br = EnergyBreakdown(ck=0.0, e_l=0.0, e_nl1=0.0, e_nl2=0.0)
        out = verify_identity(1.0, 1.0 + 1e-15, br, 1e-2)
        assert out.floor == pytest.approx(1e-12 * (1 + 1e-15) ** 2 / 1e-2)
        assert out.rel_residual < 1.0

    def test_breakdown_row(self):
        br = EnergyBreakdown(ck=-1.0, e_l=0.5, e_nl1=0.25, e_nl2=0.125)
        assert br.e_nl == 0.375 and br.scale == 1.0
        assert tuple(br.as_row()) == EnergyBreakdown.CSV_COLUMNS

    def test_halving_the_step(self):
        coarse, fine = identity_series(4e-3), identity_series(2e-3)
        assert coarse.max_rel / fine.max_rel >= 3.6
        assert coarse.mean_rel / fine.mean_rel >= 3.6
        assert math.isfinite(fine.max_rel)
