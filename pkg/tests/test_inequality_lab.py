import json
import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad

from gevrey_vp import inequality_lab as lab
from gevrey_vp.dynamics import PotentialSpec
from gevrey_vp.norms import GevreyParams
from gevrey_vp.phase_space import GridSpec, PhaseSpectrum

from conftest import gaussian_spectrum, modulated

SMALL = lab.Corpus(seed=3, size=8)


class TestYoungBilinear:
    def test_zero_factor(self, rng):
        f1 = rng.standard_normal((5, 8)) + 0j
        r = rng.standard_normal(5) + 0j
        lhs, rhs1, rhs2 = lab.young_bilinear_terms(f1, r, np.zeros((5, 8)), 2.0, 0.5)
        assert lhs == rhs1 == rhs2 == 0.0

    def test_zero_mode_reduces_to_cauchy_schwarz(self, rng):
        f1 = rng.standard_normal((5, 8)) + 1j * rng.standard_normal((5, 8))
        f2 = rng.standard_normal((5, 8)) + 1j * rng.standard_normal((5, 8))
        r = np.zeros(5, dtype=complex)
        r[0] = 0.7 - 0.2j
        lhs, rhs1, _ = lab.young_bilinear_terms(f1, r, f2, 2.0, 0.5)
        assert lhs == pytest.approx(abs(r[0] * np.sum(f1 * f2)) * 0.5, rel=1e-13)
        assert lhs <= rhs1 * (1 + 1e-14)

    def test_corpus_ratios_finite(self):
        reps = lab.test_young_bilinear(SMALL)
        for rep in reps.values():
            assert rep.n_cases == 16
            assert math.isfinite(rep.c_full) and rep.c_full > 0


class TestDensityBound:
    def test_homogeneous_gaussian_closed_form(self):
        g = GridSpec(1, 9, 128, 8.0)
        p = GevreyParams(0.3, 2.0, 1.0, 1)
        rho_norm, f_norm = lab.density_bound_terms(gaussian_spectrum(g), p)
        assert rho_norm == pytest.approx(math.exp(0.3), rel=1e-14)

        def integrand(e):
            br = math.sqrt(1 + e * e)
            return br ** 4 * (1 + e * e) * math.exp(0.6 * br - e * e)

        val, _ = quad(integrand, -np.inf, np.inf, epsabs=0, epsrel=1e-13)
        assert f_norm == pytest.approx(math.sqrt(val), rel=1e-10)

    def test_zero(self):
        lhs, rhs = lab.density_bound_terms(PhaseSpectrum.zeros(GridSpec(1, 5, 8, 3.0)), GevreyParams(0.1, 1.0))
        assert lhs == rhs == 0.0
        assert lab._ratio(lhs, rhs) == 0.0

    def test_scale_invariant_ratio(self):
        spec = modulated(GridSpec(1, 9, 32, 6.0), 0.4)
        p = GevreyParams(0.2, 3.0, 0.5, 1)
        a = lab._ratio(*lab.density_bound_terms(spec, p))
        b = lab._ratio(*lab.density_bound_terms(spec * -3.5, p))
        assert a == pytest.approx(b, rel=1e-14)

    def test_embedding_ratio_bounded(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            spec = lab.random_spectrum(rng, GridSpec(1, 9, 32, 6.0), 2.0)
            assert 0 < lab.embedding_ratio(spec, 1) < 10


class TestCommutator:
    def test_constant_u(self, rng):
        v = lab.band_limited_field(rng, 16, 1.0)
        lhs, _ = lab.commutator_terms(np.full((16, 16), 2.5), v, 2)
        assert lhs < 1e-12

    def test_zero_v(self, rng):
        u = lab.band_limited_field(rng, 16, 1.0)
        assert lab.commutator_terms(u, np.zeros((16, 16)), 2) == (0.0, 0.0)

    def test_corpus_ratios_finite(self):
        rep = lab.test_commutator(SMALL)["commutator"]
        assert math.isfinite(rep.c_full) and rep.c_full > 0

    def test_sobolev_norm_of_plane_wave(self):
        x = np.arange(16) * 2 * np.pi / 16
        u = np.cos(2 * x)[:, None] * np.ones(16)[None, :]
        # ||u||_{L2}^2 = 2 pi^2 on the torus, multiplier 1 + 4 = 5
        assert lab.sobolev_2d(u, 1.0) == pytest.approx(math.sqrt(5 * 2 * np.pi ** 2), rel=1e-13)


class TestSobolevClaims:
    def test_homogeneous_has_no_nonlinear_term(self):
        t = lab.sobolev_energy_terms(gaussian_spectrum(GridSpec(1, 9, 64, 8.0)), 2, 1, PotentialSpec())
        assert t.e_nl == 0.0

    def test_x_independent_has_no_linear_term(self):
        t = lab.sobolev_energy_terms(gaussian_spectrum(GridSpec(1, 9, 64, 8.0)), 2, 1, PotentialSpec())
        assert t.e_l < 1e-14

    def test_cancellations_exact(self):
        spec = modulated(GridSpec(1, 9, 64, 8.0), 0.3)
        t = lab.sobolev_energy_terms(spec, 2, 1, PotentialSpec())
        assert t.cancel_transport < lab.CANCELLATION_TOL
        assert t.cancel_force < lab.CANCELLATION_TOL
        assert t.e_l > 0 and t.e_nl > 0

    def test_corpus(self):
        reps = lab.test_claims_sobolev(SMALL)
        for rep in reps.values():
            assert math.isfinite(rep.c_full)
            assert rep.extra["max_cancellation"] < lab.CANCELLATION_TOL
            assert rep.extra["violations"] == 0


class TestGevreyClaims:
    def test_corpus_finite(self):
        for rep in lab.test_energy_claims(SMALL).values():
            assert math.isfinite(rep.c_full)

    def test_terms_vanish_for_homogeneous_data(self):
        spec = gaussian_spectrum(GridSpec(1, 9, 64, 8.0))
        p = GevreyParams(0.1, lab.GEVREY_SIGMA, 1.0, 1)
        assert lab.nl1_gevrey_terms(spec, p, PotentialSpec())[0] == 0.0
        assert lab.nl2_gevrey_terms(spec, p, PotentialSpec())[0] == 0.0
        assert lab.linear_gevrey_terms(spec, p)[0] == 0.0


class TestScalarInequalities:
    def test_exponential_bound_hand_values(self):
        m = lab.exp_quadratic_margin(np.array([0.0, 1.0]))
        # e^0 = 1 <= e ; e^1 <= e + e
        assert m[0] == pytest.approx(math.e - 1)
        assert m[1] == pytest.approx(1.0)
        assert abs(math.e - 2) <= math.e
        assert lab.exp_remainder_ratio(np.array([1.0]))[0] == pytest.approx((math.e - 2) / math.e, rel=1e-14)

    def test_remainder_ratio_extended_precision(self):
        mpmath.mp.dps = 50
        xs = np.array([-700.0, -3.0, -1e-3, -1e-7, 2e-5, 5e-3, 0.5, 40.0, 700.0])
        got = lab.exp_remainder_ratio(xs)
        for x, val in zip(xs, got):
            X = mpmath.mpf(float(x))
            exact = abs(mpmath.exp(X) - 1 - X) / (X * X * mpmath.exp(abs(X)))
            assert val == pytest.approx(float(exact), rel=1e-12)

    def test_mean_value_bound_at_unit_exponent(self, rng):
        k = rng.integers(-9, 10, (200, 2)).astype(float)
        l = rng.integers(-9, 10, (200, 2)).astype(float)
        eta = rng.standard_normal((200, 2)) * 5
        margins, ratios = lab.scalar_inequality_values(k, l, eta, np.ones(200), np.full(200, 2.0), np.zeros(200))
        # s = 1 is the triangle inequality |<k,eta> - <k-l,eta>| <= <l>
        assert np.all(ratios["power_difference"] <= 2.0 + 1e-12)
        assert np.all(margins["bracket_lipschitz"] >= -1e-12)

    def test_zero_violations(self):
        rep = lab.test_scalar_inequalities(20_000, seed=1)
        assert rep.samples == 20_000
        assert all(v == 0 for v in rep.violations.values())
        assert all(math.isfinite(c) for c in rep.fitted.values())


class TestCorpusMachinery:
    def test_replay_reproduces_case(self):
        rep = lab.run_claim("density_bound", SMALL)
        for case in rep.cases[:3] + rep.cases[-2:]:
            again = lab.replay(case)
            assert again == case

    def test_seed_determinism(self):
        a = lab.run_claim("young_bilinear_form1", SMALL)
        b = lab.run_claim("young_bilinear_form1", SMALL)
        c = lab.run_claim("young_bilinear_form1", lab.Corpus(seed=4, size=8))
        assert [x.ratio for x in a.cases] == [x.ratio for x in b.cases]
        assert [x.ratio for x in a.cases] != [x.ratio for x in c.cases]

    def test_doubling_bookkeeping(self):
        rep = lab.run_claim("density_embedding", SMALL)
        ratios = [c.ratio for c in rep.cases]
        assert rep.n_half == 8 and rep.n_cases == 16
        assert rep.c_half == max(ratios[:8]) and rep.c_full == max(ratios)

    def test_report_file(self, tmp_path):
        reports = {"density_bound": lab.run_claim("density_bound", SMALL)}
        path = tmp_path / "cases.jsonl"
        lab.write_report(path, reports)
        lines = path.read_text().splitlines()
        assert len(lines) == 16
        row = json.loads(lines[0])
        assert set(row) == {"name", "lhs", "rhs", "ratio", "inputs_digest"}
        assert "density_bound" in lab.summary_table(reports)

    def test_run_all_covers_every_claim(self):
        reports, scalar = lab.run_all(lab.Corpus(seed=0, size=2), scalar_samples=1000)
        assert set(reports) == set(lab.EVALUATORS)
        assert scalar.samples == 1000
