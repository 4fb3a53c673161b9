r"""Radius schedule, a priori envelope and Sobolev growth checks.

The radius obeys the saturated differential inequality

.. math::

    \dot\lambda = -\lambda\,(\lambda G + S + 1),

with ``G`` the Gevrey norm and ``S`` the Sobolev norm.  With ``G`` and ``S``
frozen over a step this is a Bernoulli equation whose exact solution is used
as the update, so positivity and monotonicity are structural.  Fed with
mid-step norms the update is second order in ``dt``.  The radius is carried
as ``log lambda`` as well, since with large norms ``lambda`` itself
underflows within a few time units while its logarithm stays exact.

All history integrals use the trapezoid rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import lambertw

from .errors import ValidationError

LOG_MAX = math.log(np.finfo(float).max)
DEFAULT_C_CAP = 1e6


@dataclass(frozen=True)
class RadiusState:
    """Current radius and the running history integrals."""

    lam: float
    lambda0: float
    c_env: float = 1.0
    integral_blowup: float = 0.0
    integral_A: float = 0.0
    t: float = 0.0
    last_blowup: float | None = None
    last_A: float | None = None
    log_lam: float | None = None

    def __post_init__(self):
        if self.log_lam is None:
            if not self.lam > 0:
                raise ValidationError(f"radius must stay positive, got {self.lam}")
            object.__setattr__(self, "log_lam", math.log(self.lam))
        elif not math.isfinite(self.log_lam):
            raise ValidationError(f"log radius must be finite, got {self.log_lam}")

    @classmethod
    def initial(cls, lambda0: float, c_env: float = 1.0) -> "RadiusState":
        return cls(lam=float(lambda0), lambda0=float(lambda0), c_env=float(c_env))


def lambda_dot(lam: float, gevrey: float, sobolev: float) -> float:
    """``-lam (lam G + S + 1)``."""
    return -lam * (lam * gevrey + sobolev + 1.0)


def bernoulli_step(lam: float, gevrey: float, sobolev: float, dt: float) -> float:
    """Exact flow of ``lam' = -lam (lam G + S + 1)`` over ``dt`` with ``G, S`` frozen."""
    c = sobolev + 1.0
    em1 = math.expm1(-c * dt)  # e^{-c dt} - 1, accurate for small c dt
    return c * lam * (1.0 + em1) / (c - gevrey * lam * em1)


def bernoulli_log_step(log_lam: float, gevrey: float, sobolev: float, dt: float) -> float:
    """:func:`bernoulli_step` in logarithmic form; immune to underflow of ``lam``."""
    c = sobolev + 1.0
    em1 = math.expm1(-c * dt)
    return log_lam - c * dt - math.log1p(-gevrey * math.exp(log_lam) * em1 / c)


def advance_lambda(state: RadiusState, norms, dt: float) -> RadiusState:
    """Update the radius with the frozen-norm exact step.

    ``norms`` is anything with ``gevrey`` and ``sobolev`` attributes (usually a
    :class:`~gevrey_vp.norms.NormReport` at the step midpoint).
    """
    log_lam = bernoulli_log_step(state.log_lam, norms.gevrey, norms.sobolev, dt)
    return replace(state, lam=math.exp(log_lam), log_lam=log_lam, t=state.t + dt)


def accumulate(state: RadiusState, dt: float, blowup_integrand: float, a_integrand: float) -> RadiusState:
    """Add one trapezoid panel to both running integrals.

    The first call only records the left endpoint values.
    """
    if state.last_blowup is None:
        return replace(state, last_blowup=blowup_integrand, last_A=a_integrand)
    return replace(
        state,
        integral_blowup=state.integral_blowup + 0.5 * dt * (state.last_blowup + blowup_integrand),
        integral_A=state.integral_A + 0.5 * dt * (state.last_A + a_integrand),
        last_blowup=blowup_integrand,
        last_A=a_integrand,
    )


@dataclass(frozen=True)
class MonitorResult:
    value: float
    exceeded: bool


def check_blowup_monitor(norms, ceiling: float | None = None) -> MonitorResult:
    """``||F||_{W^{1,inf}} + ||grad_v f||_{inf,M}``, flagged above ``ceiling``."""
    value = float(norms.force_w1inf + norms.gradv_supM)
    return MonitorResult(value=value, exceeded=ceiling is not None and value > ceiling)


def cumulative_trapezoid(t, y) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(t)
    if t.size > 1:
        out[1:] = np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))
    return out


def log_envelope(c: float, t: float, integral: float) -> float:
    """``log A`` with ``A = C exp{Ct + Ct exp[C I]}``; ``inf`` if even the log overflows."""
    inner = c * integral
    if inner > LOG_MAX:
        return math.inf
    return math.log(c) + c * t + c * t * math.exp(inner)


def envelope_from_integral(c: float, t: float, integral: float) -> float:
    logA = log_envelope(c, t, integral)
    return math.inf if logA > LOG_MAX else math.exp(logA)


@dataclass(frozen=True)
class EnvelopeValue:
    value: float
    saturated_at: float | None


def envelope_A(history, c: float, t: float) -> float:
    """A priori envelope ``A(t)`` from a monitor history.

    ``history`` provides arrays ``t`` and ``monitor`` covering ``[0, t]``; the
    integrand is ``monitor + 1``.  Overflow gives ``inf`` (see
    :func:`envelope_saturation`).
    """
    return envelope_saturation(history, c, t).value


def envelope_saturation(history, c: float, t: float) -> EnvelopeValue:
    times = np.asarray(history.t, dtype=float)
    if times.size == 0 or t < times[0] - 1e-12 or t > times[-1] + 1e-12 * max(1.0, abs(t)):
        raise ValidationError(f"history does not cover [0, {t}]")
    integ = cumulative_trapezoid(times, np.asarray(history.monitor) + 1.0)
    I_t = float(np.interp(t, times, integ))
    value = envelope_from_integral(c, t, I_t)
    saturated_at = None
    if math.isinf(value):
        for ti, Ii in zip(times, integ):
            if math.isinf(envelope_from_integral(c, ti, Ii)):
                saturated_at = float(ti)
                break
        if saturated_at is None:
            saturated_at = float(t)
    return EnvelopeValue(value=value, saturated_at=saturated_at)


@dataclass(frozen=True)
class SobolevBoundReport:
    c_fit: float
    satisfied: bool
    cap: float
    worst_time: float
    per_time: np.ndarray = field(repr=False)


def minimal_constant(target: float, integral: float) -> float:
    """Smallest ``c`` with ``target <= c exp(c I)`` (``I >= 0``)."""
    if target <= 0:
        return 0.0
    if integral <= 0:
        return target
    return float(np.real(lambertw(target * integral)) / integral)


def check_sobolev_bound(history, c_cap: float = DEFAULT_C_CAP) -> SobolevBoundReport:
    """Fit ``||f||^2_{sigma,M}(t) <= c exp[c int_0^t (monitor + 1)]`` over a history."""
    times = np.asarray(history.t, dtype=float)
    integ = cumulative_trapezoid(times, np.asarray(history.monitor) + 1.0)
    sq = np.asarray(history.sobolev, dtype=float) ** 2
    per_time = np.array([minimal_constant(s, i) for s, i in zip(sq, integ)])
    worst = int(np.argmax(per_time)) if per_time.size else 0
    c_fit = float(per_time[worst]) if per_time.size else 0.0
    return SobolevBoundReport(c_fit=c_fit, satisfied=bool(np.isfinite(c_fit) and c_fit <= c_cap),
                              cap=c_cap, worst_time=float(times[worst]) if times.size else 0.0,
                              per_time=per_time)


def sobolev_bound_rhs(c: float, integral) -> np.ndarray:
    return c * np.exp(c * np.asarray(integral, dtype=float))


def radius_lower_bound(times, gevrey, lambda0: float) -> np.ndarray:
    """``lambda0 exp(-int_0^t (2 A_hat + 1))`` with ``A_hat`` the running max of ``gevrey``."""
    a_hat = np.maximum.accumulate(np.asarray(gevrey, dtype=float))
    return lambda0 * np.exp(-cumulative_trapezoid(times, 2.0 * a_hat + 1.0))


@dataclass(frozen=True)
class EnvelopeReport:
    a_of_t: float
    sobolev_bound: float
    measured_sobolev: float
    measured_gevrey: float


@dataclass
class NormHistory:
    """Sampled norms along a run (sample times need not be uniform)."""

    t: list = field(default_factory=list)
    monitor: list = field(default_factory=list)
    sobolev: list = field(default_factory=list)
    gevrey: list = field(default_factory=list)
    lam: list = field(default_factory=list)

    def append(self, t: float, norms, lam: float):
        self.t.append(float(t))
        self.monitor.append(float(norms.force_w1inf + norms.gradv_supM))
        self.sobolev.append(float(norms.sobolev))
        self.gevrey.append(float(norms.gevrey))
        self.lam.append(float(lam))


class RadiusTracker:
    """Drives the radius schedule once per step and keeps the history.

    Per step the caller records the start-of-step norms, asks for the
    predicted mid-step radius, evaluates norms there and passes them to
    ``commit``.  ``a_hat`` (running max of the Gevrey norm) and ``c_fit``
    (running Sobolev-bound constant) are kept incrementally so a run resumed
    from a snapshot header continues bit-exactly.
    """

    def __init__(self, state: RadiusState, ceiling: float | None = None, c_cap: float = DEFAULT_C_CAP,
                 a_hat: float = 0.0, c_fit: float = 0.0):
        self.state = state
        self.ceiling = ceiling
        self.c_cap = c_cap
        self.history = NormHistory()
        self.a_hat = a_hat
        self.c_fit = c_fit

    def predict_mid(self, norms, dt: float) -> float:
        return math.exp(bernoulli_log_step(self.state.log_lam, norms.gevrey, norms.sobolev, dt / 2))

    @staticmethod
    def lambda_dot_at(lam: float, norms) -> float:
        return lambda_dot(lam, norms.gevrey, norms.sobolev)

    def observe(self, norms):
        """Fold an off-grid (mid-step) Gevrey norm into ``a_hat``."""
        self.a_hat = max(self.a_hat, norms.gevrey)

    def log_comparison_bound(self) -> float:
        """``log(lambda0 exp(-int (2 a_hat + 1)))`` at the current sample."""
        return math.log(self.state.lambda0) - self.state.integral_A

    def record(self, t: float, norms, dt: float) -> MonitorResult:
        """Record a sample at the current radius and extend the running integrals."""
        mon = check_blowup_monitor(norms, self.ceiling)
        self.a_hat = max(self.a_hat, norms.gevrey)
        self.history.append(t, norms, self.state.lam)
        self.state = accumulate(self.state, dt, mon.value + 1.0, 2.0 * self.a_hat + 1.0)
        self.c_fit = max(self.c_fit, minimal_constant(norms.sobolev ** 2, self.state.integral_blowup))
        return mon

    def commit(self, norms_mid, dt: float, t_new: float | None = None) -> RadiusState:
        """Advance the radius; ``t_new`` pins the clock to ``step * dt``."""
        self.state = advance_lambda(self.state, norms_mid, dt)
        if t_new is not None:
            self.state = replace(self.state, t=float(t_new))
        return self.state

    def checkpoint(self) -> tuple:
        return self.state, self.a_hat, self.c_fit, len(self.history.t)

    def restore(self, saved: tuple):
        """Roll back to a :meth:`checkpoint` (used when a step halts part way)."""
        self.state, self.a_hat, self.c_fit, n = saved
        for column in (self.history.t, self.history.monitor, self.history.sobolev,
                       self.history.gevrey, self.history.lam):
            del column[n:]

    def envelope(self) -> float:
        s = self.state
        return envelope_from_integral(s.c_env, s.t, s.integral_blowup)

    def sobolev_report(self) -> SobolevBoundReport:
        return check_sobolev_bound(self.history, self.c_cap)

    def to_header(self) -> dict:
        s = self.state
        out = {"tracker.lambda0": s.lambda0, "tracker.log_lambda": s.log_lam, "tracker.c_env": s.c_env,
               "tracker.integral_blowup": s.integral_blowup, "tracker.integral_A": s.integral_A,
               "tracker.t": s.t, "tracker.a_hat": float(self.a_hat), "tracker.c_fit": float(self.c_fit)}
        if s.last_blowup is not None:
            out["tracker.last_blowup"] = s.last_blowup
            out["tracker.last_A"] = s.last_A
        return out

    @classmethod
    def from_header(cls, header: dict, ceiling: float | None = None,
                    c_cap: float = DEFAULT_C_CAP) -> "RadiusTracker":
        def get(key, default=None):
            return header.get(f"tracker.{key}", default)

        lam = float(header["lambda"])
        log_lam = get("log_lambda")
        last_blowup = get("last_blowup")
        last_A = get("last_A")
        state = RadiusState(
            lam=lam, lambda0=float(get("lambda0", lam)), c_env=float(get("c_env", 1.0)),
            integral_blowup=float(get("integral_blowup", 0.0)), integral_A=float(get("integral_A", 0.0)),
            t=float(get("t", header.get("time", 0.0))),
            last_blowup=None if last_blowup is None else float(last_blowup),
            last_A=None if last_A is None else float(last_A),
            log_lam=None if log_lam is None else float(log_lam),
        )
        return cls(state, ceiling=ceiling, c_cap=c_cap, a_hat=float(get("a_hat", 0.0)),
                   c_fit=float(get("c_fit", 0.0)))
