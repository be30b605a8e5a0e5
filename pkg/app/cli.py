#!/usr/bin/env python3
"""
Command-line front end: check, synth, run and sweep on scenario files.

Exit codes: 0 ok, 1 assumption/synthesis failure or tracking threshold
missed, 2 parse or input error, 3 divergence.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from app.config import configure_logging
from app.core.errors import CoopRegError, SynthesisError
from app.core.pipeline import ExitCode, check, check_exit_code, exit_code_for, run, sweep, synth
from app.core.scenario_io import (
    build_manifest,
    load_gains,
    load_scenario,
    save_gains,
    write_manifest,
    write_trajectory_csv,
)

logger = logging.getLogger(__name__)


def _grid(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _write_json(data, path: Optional[str]):
    if path:
        Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load(args):
    sc = load_scenario(args.scenario)
    overrides = {k: getattr(args, k) for k in ("step", "horizon", "mu") if getattr(args, k) is not None}
    return sc.with_overrides(**overrides) if overrides else sc


def cmd_check(args) -> ExitCode:
    sc = _load(args)
    report = check(sc)
    print(report.to_text())
    _write_json(report.to_dict(), args.out)
    return check_exit_code(report)


def cmd_synth(args) -> ExitCode:
    if not args.gains:
        print("✗ synth needs --gains <path> for the output", file=sys.stderr)
        return ExitCode.INPUT_ERROR
    sc = _load(args)
    try:
        gains = synth(sc)
    except SynthesisError as e:
        who = f" [agent {e.agent}]" if e.agent is not None else ""
        print(f"✗ synthesis failed{who}, check '{e.check}': {e}", file=sys.stderr)
        return ExitCode.FAILED
    save_gains(gains, args.gains)
    manifest_path = f"{args.gains}.manifest.json"
    write_manifest(build_manifest(sc, gains, {"scenario": args.scenario}), manifest_path)
    rule = gains.observer.rule.value if gains.observer else "none"
    mu = f", mu={gains.observer.mu:.6g}" if gains.observer else ""
    print(f"✓ gains for {len(gains.agents)} agent(s) written to {args.gains} (observer {rule}{mu})")
    print(f"  manifest: {manifest_path}")
    return ExitCode.OK


def cmd_run(args) -> ExitCode:
    sc = _load(args)
    gains = load_gains(args.gains) if args.gains else None
    result = run(sc, gains, flip_k1=args.flip_k1, threshold=args.threshold)
    if args.csv and result.trajectory is not None:
        write_trajectory_csv(result.trajectory, args.csv)
    _write_json(result.to_dict(), args.out)
    if result.diverged:
        print(f"✗ diverged at t={result.divergence['time']:g} (state norm {result.divergence['norm']:.3e})")
        return result.exit_code
    m = result.metrics
    for a in m.agents:
        obs = f", observer {a.observer_error:.3e}" if a.observer_error is not None else ""
        print(f"  agent {a.agent}: final |e| {a.final_error:.3e}{obs}")
    mark = "✓" if m.converged else "✗"
    print(f"{mark} max final-window |e| = {m.max_final_error:.3e} (threshold {m.threshold:g}, window from t={m.window_start:g})")
    return result.exit_code


def cmd_sweep(args) -> ExitCode:
    sc = _load(args)
    result = sweep(sc, mus=_grid(args.mu_grid), steps=_grid(args.step_grid), threshold=args.threshold)
    for row in result.rows:
        label = ", ".join(f"{k}={v:g}" for k, v in (("mu", row.mu), ("step", row.step)) if v is not None)
        if row.error:
            print(f"✗ {label}: {row.error}")
        elif row.divergence:
            print(f"✗ {label}: diverged at t={row.divergence['time']:g}")
        else:
            mark = "✓" if row.converged else "✗"
            print(f"{mark} {label}: max final-window |e| = {row.metrics.max_final_error:.3e}")
    _write_json(result.to_dict(), args.out)
    return ExitCode.OK


COMMANDS = {"check": cmd_check, "synth": cmd_synth, "run": cmd_run, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coopreg", description="Cooperative output regulation toolkit")
    parser.add_argument("command", choices=sorted(COMMANDS), help="What to do with the scenario")
    parser.add_argument("--scenario", required=True, help="Scenario JSON file")
    parser.add_argument("--gains", help="Gains file (written by synth, read by run)")
    parser.add_argument("--csv", help="Trajectory CSV output (run)")
    parser.add_argument("--out", help="Structured JSON report (check, run, sweep)")
    parser.add_argument("--mu", dest="mu_grid", help="Observer gain μ; comma-separated grid for sweep")
    parser.add_argument("--step", dest="step_grid", help="Integration step; comma-separated grid for sweep")
    parser.add_argument("--horizon", type=float, help="Override the simulation horizon")
    parser.add_argument("--threshold", type=float, help="Tracking threshold for convergence")
    parser.add_argument("--flip-k1", action="store_true", help="Negate every K1 (destabilizing test sabotage)")
    parser.add_argument("--seed", type=int, help="Reserved; the kernel uses no randomness")
    return parser


def _single(parser: argparse.ArgumentParser, text: Optional[str], flag: str) -> Optional[float]:
    if text is None:
        return None
    try:
        return float(text)
    except ValueError:
        parser.error(f"{flag} expects a number outside sweep, got '{text}'")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging()
    if args.command != "sweep":
        args.mu = _single(parser, args.mu_grid, "--mu")
        args.step = _single(parser, args.step_grid, "--step")
    else:
        args.mu = args.step = None
    if args.seed is not None:
        logger.debug("seed %d ignored", args.seed)
    try:
        return int(COMMANDS[args.command](args))
    except argparse.ArgumentTypeError as e:
        print(f"✗ {e}", file=sys.stderr)
        return int(ExitCode.INPUT_ERROR)
    except CoopRegError as e:
        code = exit_code_for(e)
        print(f"✗ {e}", file=sys.stderr)
        return int(code)


if __name__ == "__main__":
    sys.exit(main())
