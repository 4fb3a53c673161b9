import math
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from gevrey_vp.errors import ValidationError
from gevrey_vp.regularity import (NormHistory, RadiusState, RadiusTracker, advance_lambda, bernoulli_log_step,
                                  bernoulli_step, check_blowup_monitor, check_sobolev_bound, envelope_A,
                                  envelope_saturation, lambda_dot, minimal_constant, radius_lower_bound,
                                  sobolev_bound_rhs)


def norms(gevrey=0.0, sobolev=0.0, force=0.0, gradv=0.0):
    return SimpleNamespace(gevrey=gevrey, sobolev=sobolev, force_w1inf=force, gradv_supM=gradv)


def history(t, monitor, sobolev=None):
    t = np.asarray(t, dtype=float)
    return SimpleNamespace(t=t, monitor=np.full_like(t, monitor) if np.isscalar(monitor) else monitor,
                           sobolev=sobolev)


class TestAdvanceLambda:
    def test_zero_norms_decay_exponentially(self):
        s = advance_lambda(RadiusState.initial(0.3), norms(), 0.01)
        assert s.lam == pytest.approx(0.3 * math.exp(-0.01), rel=1e-15)
        assert s.t == pytest.approx(0.01)

    def test_constant_norms_against_ode(self):
        G, S, lam0 = 2.5, 1.7, 0.4
        sol = solve_ivp(lambda t, y: [lambda_dot(y[0], G, S)], (0, 1), [lam0], rtol=1e-13, atol=1e-16)
        state = RadiusState.initial(lam0)
        for _ in range(10_000):
            state = advance_lambda(state, norms(G, S), 1e-4)
        assert abs(state.lam - sol.y[0, -1]) < 1e-6
        assert state.t == pytest.approx(1.0)

    def test_monotone(self, rng):
        state = RadiusState.initial(0.5)
        for _ in range(200):
            new = advance_lambda(state, norms(*rng.uniform(0, 50, size=2)), 0.01)
            assert 0 < new.lam <= state.lam
            state = new

    def test_log_form_matches_and_survives_underflow(self):
        assert math.exp(bernoulli_log_step(math.log(0.2), 3.0, 2.0, 0.05)) == pytest.approx(
            bernoulli_step(0.2, 3.0, 2.0, 0.05), rel=1e-14)
        state = RadiusState.initial(0.1)
        for _ in range(100):
            state = advance_lambda(state, norms(10.0, 1e3), 1.0)
        assert state.lam == 0.0
        assert math.isfinite(state.log_lam)
        # only the first step sees a non-negligible lam * G term
        expected = math.log(0.1) - 100 * 1001.0 - math.log1p(10.0 * 0.1 / 1001.0)
        assert state.log_lam == pytest.approx(expected, rel=1e-12)

    def test_state_rejects_nonpositive(self):
        with pytest.raises(ValidationError):
            RadiusState.initial(0.0)
        with pytest.raises(ValidationError):
            RadiusState(lam=0.0, lambda0=1.0, log_lam=-math.inf)


class TestEnvelope:
    def test_at_time_zero(self):
        assert envelope_A(history([0.0, 1.0], 3.0), 2.5, 0.0) == pytest.approx(2.5)

    def test_constant_monitor_closed_form(self):
        C, g = 0.3, 0.8
        t = np.linspace(0, 2, 201)
        h = history(t, g)
        for T in (0.5, 1.0, 2.0):
            closed = C * math.exp(C * T + C * T * math.exp(C * (g + 1) * T))
            assert envelope_A(h, C, T) == pytest.approx(closed, rel=1e-12)

    def test_monotone_in_time(self, rng):
        t = np.linspace(0, 3, 61)
        h = history(t, rng.uniform(0, 2, size=t.size))
        vals = [envelope_A(h, 0.5, T) for T in t]
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_saturation_reports_time(self):
        t = np.linspace(0, 10, 101)
        ev = envelope_saturation(history(t, 50.0), 5.0, 10.0)
        assert math.isinf(ev.value)
        assert 0 < ev.saturated_at <= 10.0
        assert math.isfinite(envelope_A(history(t, 50.0), 5.0, ev.saturated_at - 0.1))

    def test_history_must_cover_time(self):
        with pytest.raises(ValidationError):
            envelope_A(history([0.0, 1.0], 1.0), 1.0, 2.0)


class TestBlowupMonitor:
    def test_homogeneous_is_gradient_only(self):
        assert check_blowup_monitor(norms(force=0.0, gradv=0.24)).value == 0.24

    def test_sum_and_scaling(self):
        a = check_blowup_monitor(norms(force=0.3, gradv=0.5))
        b = check_blowup_monitor(norms(force=0.6, gradv=1.0))
        assert a.value == 0.8 and b.value == 2 * a.value

    def test_ceiling(self):
        assert check_blowup_monitor(norms(force=1.0, gradv=1.0), ceiling=1.5).exceeded
        assert not check_blowup_monitor(norms(force=1.0, gradv=1.0), ceiling=2.5).exceeded
        assert not check_blowup_monitor(norms(force=1.0, gradv=1.0)).exceeded


class TestSobolevBound:
    def test_minimal_constant_solves_equation(self):
        for target, integral in ((3.0, 0.5), (100.0, 2.0), (1e-3, 5.0)):
            c = minimal_constant(target, integral)
            assert c * math.exp(c * integral) == pytest.approx(target, rel=1e-12)
        assert minimal_constant(4.0, 0.0) == 4.0
        assert minimal_constant(0.0, 1.0) == 0.0

    def test_constant_norm_fits_initial_square(self):
        t = np.linspace(0, 5, 51)
        rep = check_sobolev_bound(history(t, 0.3, sobolev=np.full(t.size, 2.0)))
        assert rep.c_fit == pytest.approx(4.0)
        assert rep.worst_time == 0.0
        assert rep.satisfied

    def test_fit_holds_everywhere(self, rng):
        t = np.linspace(0, 2, 41)
        mon = rng.uniform(0, 3, t.size)
        sob = np.exp(rng.uniform(0, 2, t.size))
        rep = check_sobolev_bound(history(t, mon, sobolev=sob))
        integ = np.concatenate([[0], np.cumsum(0.5 * np.diff(t) * (mon[1:] + mon[:-1] + 2))])
        assert np.all(sob ** 2 <= sobolev_bound_rhs(rep.c_fit, integ) * (1 + 1e-12))

    def test_cap(self):
        t = np.array([0.0])
        rep = check_sobolev_bound(history(t, 0.0, sobolev=np.array([2e3])), c_cap=1e6)
        assert rep.c_fit == pytest.approx(4e6) and not rep.satisfied

    def test_bound_rhs_monotone(self):
        vals = sobolev_bound_rhs(2.0, np.linspace(0, 3, 20))
        assert np.all(np.diff(vals) > 0)


class TestTracker:
    def test_record_commit_and_comparison(self):
        tr = RadiusTracker(RadiusState.initial(0.5))
        dt = 0.1
        G = [1.0, 1.5, 1.2, 2.0]
        tr.record(0.0, norms(G[0], 1.0, 0.1, 0.2), dt)
        for n, g in enumerate(G[1:], start=1):
            tr.commit(norms(g, 1.0), dt, n * dt)
            tr.record(n * dt, norms(g, 1.0, 0.1, 0.2), dt)
        assert tr.a_hat == 2.0
        bound = radius_lower_bound(tr.history.t, tr.history.gevrey, 0.5)
        assert math.log(bound[-1]) == pytest.approx(tr.log_comparison_bound(), rel=1e-14)
        assert np.all(np.array(tr.history.lam) >= bound)
        assert np.all(np.diff(tr.history.lam) < 0)

    def test_header_round_trip(self):
        tr = RadiusTracker(RadiusState.initial(0.5, c_env=2.0), ceiling=10.0)
        tr.record(0.0, norms(1.0, 2.0, 0.1, 0.2), 0.1)
        tr.commit(norms(1.0, 2.0), 0.1, 0.1)
        tr.record(0.1, norms(1.1, 2.0, 0.1, 0.2), 0.1)
        header = {"lambda": tr.state.lam, "time": 0.1, **tr.to_header()}
        back = RadiusTracker.from_header(header, ceiling=10.0)
        assert back.state == tr.state
        assert back.a_hat == tr.a_hat and back.c_fit == tr.c_fit

    def test_checkpoint_restore(self):
        tr = RadiusTracker(RadiusState.initial(0.5))
        tr.record(0.0, norms(1.0, 1.0), 0.1)
        saved = tr.checkpoint()
        tr.commit(norms(5.0, 5.0), 0.1, 0.1)
        tr.record(0.1, norms(9.0, 5.0), 0.1)
        tr.restore(saved)
        assert tr.state == saved[0] and tr.a_hat == 1.0
        assert len(tr.history.t) == 1

    def test_norm_history_append(self):
        h = NormHistory()
        h.append(0.5, norms(1.0, 2.0, 0.25, 0.5), 0.3)
        assert (h.t, h.monitor, h.sobolev, h.gevrey, h.lam) == ([0.5], [0.75], [2.0], [1.0], [0.3])
