"""Command line entry point: ``gevrey-vp run | verify | inspect``.

Exit codes: 0 ok, 2 validation error, 3 numerical halt, 4 suite failure.
The output root defaults to ``$GEVREY_VP_OUTPUT_ROOT`` or the working
directory; ``--output-root`` overrides both.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import suites
from .errors import NumericalHalt, ValidationError
from .runner import output_root, run
from .scenario import ScenarioSpec
from .snapshot import read_snapshot

EXIT_OK, EXIT_VALIDATION, EXIT_HALT, EXIT_SUITE = 0, 2, 3, 4


def _cmd_run(args) -> int:
    scenario = ScenarioSpec.load(args.scenario)
    result = run(scenario, args.output_root)
    s = result.summary
    print(f"{s['scenario']}: {s['status']} after {s['steps']} steps (t={s['t_final']:g})")
    if s["reason"]:
        print(f"halt reason: {s['reason']}: {s['message']}")
    print(f"lambda(T) = {s['lambda_final']:.6g}, max relative identity residual = {s['residuals']['max_rel']:.3e}")
    for name, ok in s["bound_checks"].items():
        print(f"  {name:<20} {'ok' if ok else 'VIOLATED'}")
    print(f"outputs in {result.output_dir}")
    return result.exit_code


def _suite_kwargs(name: str, args) -> dict:
    if name != "inequalities":
        return {}
    kw = {"seed": args.seed}
    if args.size is not None:
        kw["size"] = args.size
    if args.scalar_samples is not None:
        kw["scalar_samples"] = args.scalar_samples
    if args.report:
        kw["report_path"] = output_root(args.output_root) / "verify" / "inequality_cases.jsonl"
    return kw


def _cmd_verify(args) -> int:
    names = suites.SUITES if args.suite == "all" else (args.suite,)
    results = {}
    for name in names:
        rep = suites.run_suite(name, **_suite_kwargs(name, args))
        print(rep.text())
        results[name] = {"passed": rep.passed,
                         "checks": [{"label": c.label, "value": c.value, "threshold": c.threshold,
                                     "op": c.op, "ok": c.ok} for c in rep.checks]}
    if args.report:
        path = output_root(args.output_root) / "verify" / "report.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(results, indent=2, default=float) + "\n")
        print(f"report written to {path}")
    return EXIT_OK if all(r["passed"] for r in results.values()) else EXIT_SUITE


def _cmd_inspect(args) -> int:
    spec, header = read_snapshot(args.snapshot)
    for key, value in header.items():
        print(f"{key}: {value}")
    res, idx = spec.symmetry_residual()
    print(f"mass: {spec.mass()!r}")
    print(f"l2_norm: {spec.l2_norm()!r}")
    print(f"symmetry_residual: {res:.3e} at {idx}")
    mags = np.abs(spec.coeffs)
    print(f"max |f_hat|: {mags.max():.6e}, smallest stored magnitude above 0: "
          f"{mags[mags > 0].min() if np.any(mags > 0) else 0.0:.3e}")
    return EXIT_OK


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gevrey-vp", description="Spectral Vlasov-Poisson runs with Gevrey-norm tracking.")
    p.add_argument("--output-root", default=None, help="directory for outputs (default: $GEVREY_VP_OUTPUT_ROOT or .)")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("scenario")
    r.set_defaults(func=_cmd_run)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=suites.SUITES + ("all",))
    v.add_argument("--size", type=int, default=None, help="inequality corpus size N (default 1000)")
    v.add_argument("--scalar-samples", type=int, default=None, help="scalar inequality samples (default 100000)")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--report", action="store_true", help="write JSON reports under <output-root>/verify")
    v.set_defaults(func=_cmd_verify)

    i = sub.add_parser("inspect", help="print a snapshot header and summary")
    i.add_argument("snapshot")
    i.set_defaults(func=_cmd_inspect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    with warnings.catch_warnings():
        warnings.showwarning = _show_warning
        try:
            return args.func(args)
        except ValidationError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        except NumericalHalt as exc:
            print(f"halt ({exc.reason}): {exc}", file=sys.stderr)
            return EXIT_HALT


if __name__ == "__main__":
    sys.exit(main())
