"""Run orchestration: the per-step monitoring loop, snapshots and the summary.

Each step ``n -> n+1`` does, in order:

1. a half step of the scheme to get the midpoint state,
2. the predicted midpoint radius from the start-of-step norms,
3. norms and energy terms at the midpoint,
4. the full step and the radius update driven by the midpoint norms,
5. the end-of-step norms and the identity residual against the centred
   difference of ``(1/2)||f||^2`` across the step.

Everything a later step depends on (radius tracker, conservation ledger,
running summary statistics) is written into snapshot headers, so a run
resumed from a snapshot reproduces the uninterrupted run bit-exactly.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .diagnostics import DiagnosticsRecord, DiagnosticsWriter
from .dynamics import PotentialSpec
from .energy import EnergyBreakdown, energy_breakdown, verify_identity
from .errors import BlowupCeilingExceeded, NumericalHalt, ValidationError
from .integrator import ConservationLedger, StepPolicy, step
from .norms import GevreyParams, NormReport, norm_report
from .phase_space import PhaseSpectrum
from .regularity import RadiusState, RadiusTracker
from .scenario import ScenarioSpec, build_initial
from .snapshot import write_snapshot

OUTPUT_ROOT_ENV = "GEVREY_VP_OUTPUT_ROOT"
COMPARISON_SLACK = 1e-12  # relative round-off allowance in the log-radius comparison


def output_root(explicit=None) -> Path:
    if explicit is not None:
        return Path(explicit)
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "."))


@dataclass
class StepResult:
    spectrum: PhaseSpectrum
    norms: NormReport
    energy: EnergyBreakdown
    norms_mid: NormReport
    lam_mid: float
    lambda_dot: float


class IdentityStepper:
    """Advances the state and the radius together and measures the identity residual."""

    def __init__(self, policy: StepPolicy, pot: PotentialSpec, params: GevreyParams):
        self.policy = policy
        self.pot = pot
        self.params = params
        self.dealias = policy.scheme == "rk4_direct"

    def norms(self, spec: PhaseSpectrum, lam: float) -> NormReport:
        rep = norm_report(spec, self.params.with_(lam=lam), self.pot)
        if not all(math.isfinite(v) for v in rep.as_row().values()):
            raise NumericalHalt(f"non-finite norm report {rep}")
        return rep

    def advance(self, spec: PhaseSpectrum, norms: NormReport, tracker: RadiusTracker,
                t_new: float) -> StepResult:
        dt = self.policy.dt
        mid = step(spec, self.policy, self.pot, dt / 2)
        lam_mid = tracker.predict_mid(norms, dt)
        nm = self.norms(mid, lam_mid)
        tracker.observe(nm)
        ld = tracker.lambda_dot_at(lam_mid, nm)
        br = energy_breakdown(mid, self.params.with_(lam=lam_mid), ld, self.pot, dealias=self.dealias)
        new = step(spec, self.policy, self.pot)
        tracker.commit(nm, dt, t_new)
        nr = self.norms(new, tracker.state.lam)
        br = verify_identity(norms.gevrey, nr.gevrey, br, dt)
        return StepResult(spectrum=new, norms=nr, energy=br, norms_mid=nm, lam_mid=lam_mid, lambda_dot=ld)


@dataclass
class RunStats:
    """Running extrema over completed steps; all fields survive a snapshot round trip."""

    steps: int = 0
    max_rel_residual: float = 0.0
    sum_rel_residual: float = 0.0
    max_abs_residual: float = 0.0
    max_abs_ck: float = 0.0
    max_abs_e_l: float = 0.0
    max_abs_e_nl1: float = 0.0
    max_abs_e_nl2: float = 0.0
    max_ck: float = -math.inf
    max_monitor: float = 0.0
    min_log_margin: float = math.inf
    radius_monotone: int = 1
    comparison_ok: int = 1

    def update_step(self, br: EnergyBreakdown, lam_before: float, lam_after: float):
        """``lam_before``/``lam_after`` are log radii."""
        self.steps += 1
        self.max_rel_residual = max(self.max_rel_residual, br.rel_residual)
        self.sum_rel_residual += br.rel_residual
        self.max_abs_residual = max(self.max_abs_residual, abs(br.residual))
        self.max_abs_ck = max(self.max_abs_ck, abs(br.ck))
        self.max_abs_e_l = max(self.max_abs_e_l, abs(br.e_l))
        self.max_abs_e_nl1 = max(self.max_abs_e_nl1, abs(br.e_nl1))
        self.max_abs_e_nl2 = max(self.max_abs_e_nl2, abs(br.e_nl2))
        self.max_ck = max(self.max_ck, br.ck)
        if lam_after > lam_before:
            self.radius_monotone = 0

    def update_sample(self, monitor: float, log_lam: float, log_bound: float):
        self.max_monitor = max(self.max_monitor, monitor)
        margin = log_lam - log_bound
        self.min_log_margin = min(self.min_log_margin, margin)
        if margin < -COMPARISON_SLACK * max(1.0, abs(log_bound)):
            self.comparison_ok = 0

    def to_header(self) -> dict:
        return {f"stats.{k}": v for k, v in asdict(self).items()}

    @classmethod
    def from_header(cls, header: dict) -> "RunStats":
        out = cls()
        for f in fields(cls):
            key = f"stats.{f.name}"
            if key in header:
                setattr(out, f.name, type(getattr(out, f.name))(header[key]))
        return out


def _ledger_header(ledger: ConservationLedger) -> dict:
    return {f"ledger.{k}": float(v) for k, v in asdict(ledger).items()}


def _ledger_from_header(header: dict) -> ConservationLedger | None:
    if "ledger.mass0" not in header:
        return None
    return ConservationLedger(**{f.name: float(header[f"ledger.{f.name}"]) for f in fields(ConservationLedger)})


def _json_float(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


@dataclass
class RunResult:
    exit_code: int
    output_dir: Path
    summary: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.exit_code == 0


class Run:
    """State of one scenario run; ``execute`` drives it to the end or a halt."""

    def __init__(self, scenario: ScenarioSpec, out_dir: Path):
        self.scenario = scenario
        self.out_dir = Path(out_dir)
        init = build_initial(scenario)
        self.warnings = list(init.warnings)
        self.spec = init.spectrum
        self.n = init.step
        header = init.header or {}
        mon = scenario.monitor
        if init.header is not None and "tracker.lambda0" in header:
            if "run.dt" in header and float(header["run.dt"]) != scenario.step.dt:
                raise ValidationError(f"snapshot was written with dt={header['run.dt']}, scenario has {scenario.step.dt}")
            self.tracker = RadiusTracker.from_header(header, mon.ceiling, mon.c_cap)
            self.fresh = False
        else:
            lam0 = float(header.get("lambda", scenario.gevrey.lam))
            self.tracker = RadiusTracker(RadiusState.initial(lam0, mon.c_env), mon.ceiling, mon.c_cap)
            self.fresh = True
        self.ledger = _ledger_from_header(header) or ConservationLedger.start(self.spec)
        self.stats = RunStats.from_header(header)
        self.stepper = IdentityStepper(scenario.step, scenario.potential, scenario.gevrey)
        self.snapshots: list = []

    @property
    def dt(self) -> float:
        return self.scenario.step.dt

    def time(self, n: int) -> float:
        return n * self.dt

    def _snapshot(self, name: str) -> Path:
        extra = {"scenario": self.scenario.name, "run.dt": self.dt}
        extra.update(self.tracker.to_header())
        extra.update(_ledger_header(self.ledger))
        extra.update(self.stats.to_header())
        path = write_snapshot(self.out_dir / "snapshots" / name, self.spec, self.time(self.n),
                              self.tracker.state.lam, step=self.n, extra=extra)
        self.snapshots.append(str(path))
        return path

    def _sample(self, norms: NormReport):
        mon = self.tracker.record(self.time(self.n), norms, self.dt)
        self.stats.update_sample(mon.value, self.tracker.state.log_lam, self.tracker.log_comparison_bound())
        return mon

    def execute(self) -> RunResult:
        sc = self.scenario
        self.out_dir.mkdir(parents=True, exist_ok=True)
        total = sc.step.n_steps
        reason, message = None, ""
        writer = DiagnosticsWriter(self.out_dir / "diagnostics.csv")
        try:
            norms = self.stepper.norms(self.spec, self.tracker.state.lam)
            if self.fresh:
                mon = self._sample(norms)
                if mon.exceeded:
                    raise BlowupCeilingExceeded(f"monitor {mon.value:.6g} above ceiling at t=0")
            while self.n < total:
                saved = self.tracker.checkpoint()
                lam_before = self.tracker.state.log_lam
                try:
                    res = self.stepper.advance(self.spec, norms, self.tracker, self.time(self.n + 1))
                except NumericalHalt:
                    self.tracker.restore(saved)
                    raise
                self.spec, norms, self.n = res.spectrum, res.norms, self.n + 1
                drifts = self.ledger.observe(self.spec)
                self.stats.update_step(res.energy, lam_before, self.tracker.state.log_lam)
                mon = self._sample(norms)
                if self.n % sc.outputs.csv_stride == 0:
                    writer.write(self._record(res, mon.value, drifts))
                if sc.outputs.snapshot_stride and self.n % sc.outputs.snapshot_stride == 0:
                    self._snapshot(f"step_{self.n:08d}.snap")
                if mon.exceeded:
                    raise BlowupCeilingExceeded(
                        f"monitor {mon.value:.6g} above ceiling {sc.monitor.ceiling:g} at t={self.time(self.n):g}")
        except NumericalHalt as exc:
            reason, message = exc.reason, str(exc)
            self._snapshot("halt.snap")
        finally:
            writer.close()
        if reason is None:
            self._snapshot("final.snap")
        summary = self.summary(reason, message, writer.rows)
        (self.out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        return RunResult(exit_code=0 if reason is None else 3, output_dir=self.out_dir, summary=summary)

    def _record(self, res: StepResult, monitor: float, drifts) -> DiagnosticsRecord:
        st = self.tracker.state
        radius = {"lambda": st.lam, "lambda_dot": res.lambda_dot, "integral_blowup": st.integral_blowup,
                  "integral_A": st.integral_A, "a_of_t": self.tracker.envelope(), "monitor": monitor,
                  "c_fit": self.tracker.c_fit}
        return DiagnosticsRecord(t=self.time(self.n), step=self.n, norms=res.norms, energy=res.energy,
                                 radius=radius, conservation=drifts)

    def summary(self, reason, message, rows) -> dict:
        st, stats, led = self.tracker.state, self.stats, self.ledger
        mean_rel = stats.sum_rel_residual / stats.steps if stats.steps else 0.0
        return {
            "scenario": self.scenario.name,
            "seed": self.scenario.seed,
            "scheme": self.scenario.step.scheme,
            "status": "completed" if reason is None else "halted",
            "reason": reason,
            "message": message,
            "steps": self.n,
            "t_final": self.time(self.n),
            "lambda0": st.lambda0,
            "lambda_final": st.lam,
            "log_lambda_final": st.log_lam,
            "fitted_constants": {"sobolev_c_fit": self.tracker.c_fit, "c_env": st.c_env},
            "residuals": {"max_rel": stats.max_rel_residual, "mean_rel": mean_rel,
                          "max_abs": stats.max_abs_residual},
            "max_abs_energy_terms": {"ck": stats.max_abs_ck, "e_l": stats.max_abs_e_l,
                                     "e_nl1": stats.max_abs_e_nl1, "e_nl2": stats.max_abs_e_nl2},
            "conservation": {"max_mass_drift": led.max_mass_drift, "max_l2_drift": led.max_l2_drift,
                             "max_realness": led.max_realness},
            "bound_checks": {
                "radius_positive": math.isfinite(st.log_lam),
                "radius_monotone": bool(stats.radius_monotone),
                "radius_comparison": bool(stats.comparison_ok),
                "sobolev_bound": math.isfinite(self.tracker.c_fit) and self.tracker.c_fit <= self.tracker.c_cap,
                "ck_nonpositive": stats.max_ck <= 0.0 or stats.steps == 0,
            },
            "radius_log_margin": _json_float(stats.min_log_margin),
            "envelope_A": _json_float(self.tracker.envelope()),
            "max_monitor": stats.max_monitor,
            "diagnostics_rows": rows,
            "snapshots": self.snapshots,
            "warnings": self.warnings,
        }


def run(scenario: ScenarioSpec, root=None) -> RunResult:
    """Execute ``scenario`` under ``root / outputs.directory``.

    ``root`` defaults to ``$GEVREY_VP_OUTPUT_ROOT`` or the working directory.
    Validation problems raise :class:`ValidationError`; numerical halts are
    reported through the result (exit code 3) with a ``halt.snap`` of the last
    good state.
    """
    out_dir = output_root(root) / scenario.outputs.directory
    return Run(scenario, out_dir).execute()
