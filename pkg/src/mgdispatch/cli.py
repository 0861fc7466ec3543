"""Command-line front end.

Exit codes: 0 success, 2 unreadable/unparseable input, 3 invariant
violation in an input file, 4 infeasible scenario or schedule.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .decision import FcmParams, GrpParams
from .pipeline import (InfeasibleScenarioError, InfeasibleScheduleError,
                       RunConfig, cmd_decide, cmd_optimize, cmd_reserve_sweep,
                       cmd_validate)
from .scenario_io import (BUNDLED_SCENARIOS, ScenarioParseError,
                          ScenarioValidationError, bundled_scenario_path)
from .thetadea import ThetaDeaParams

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVALID = 3
EXIT_INFEASIBLE = 4


def _resolve_scenario(arg: str) -> Path:
    if arg.startswith("bundled:"):
        return bundled_scenario_path(arg.split(":", 1)[1])
    return Path(arg)


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgdispatch",
        description="Multi-objective day-ahead dispatch for an isolated "
                    "microgrid under renewable and load uncertainty.")
    sub = parser.add_subparsers(dest="command", required=True)

    opt = sub.add_parser("optimize", help="search the Pareto archive")
    opt.add_argument("--scenario", required=True,
                     help=f"scenario JSON path, or bundled:<name> with "
                          f"name in {sorted(BUNDLED_SCENARIOS)}")
    opt.add_argument("--seed", type=int, default=1)
    opt.add_argument("--pop", type=int, default=100)
    opt.add_argument("--gens", type=int, default=100)
    opt.add_argument("--theta", type=float, default=5.0)
    opt.add_argument("--q", type=float, default=None,
                     help="override the scenario discretization step (kW)")
    opt.add_argument("--alpha", type=float, default=None,
                     help="override the scenario confidence level")
    opt.add_argument("--out", required=True)

    dec = sub.add_parser("decide", help="cluster + rank an archive")
    dec.add_argument("--archive", required=True)
    dec.add_argument("--schedules", default=None,
                     help="schedules JSON (default: sibling of the archive)")
    dec.add_argument("--clusters", type=int, default=3)
    dec.add_argument("--weights", default="1,1,1",
                     help="indicator weights a,b,c (normalized to sum 1)")
    dec.add_argument("--rho", type=float, default=0.5)
    dec.add_argument("--seed", type=int, default=0)
    dec.add_argument("--out", default=None,
                     help="output directory (default: archive directory)")

    swp = sub.add_parser("reserve-sweep",
                         help="required reserve vs confidence level")
    swp.add_argument("--scenario", required=True)
    swp.add_argument("--alphas", default="0.8,0.85,0.9,0.95")
    swp.add_argument("--q", type=float, default=None)
    swp.add_argument("--out", required=True)

    val = sub.add_parser("validate",
                         help="Monte-Carlo reserve coverage of a schedule")
    val.add_argument("--schedule", required=True)
    val.add_argument("--samples", type=int, default=100000)
    val.add_argument("--seed", type=int, default=1)
    val.add_argument("--out", required=True)
    return parser


def _print_timings(timings: dict[str, float]) -> None:
    for stage, seconds in timings.items():
        print(f"  {stage:>20s}: {seconds:8.3f} s", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "optimize":
            cfg = RunConfig(
                scenario_path=_resolve_scenario(args.scenario),
                out_dir=args.out,
                dea=ThetaDeaParams(theta=args.theta, pop_size=args.pop,
                                   generations=args.gens, rng_seed=args.seed),
                step_q=args.q, confidence_alpha=args.alpha)
            report = cmd_optimize(cfg)
            print(f"archive: {report.files['archive']} "
                  f"({report.archive_objectives.shape[0]} solutions)")
        elif args.command == "decide":
            archive = Path(args.archive)
            weights = _parse_floats(args.weights)
            cfg = RunConfig(
                out_dir=args.out or archive.parent,
                fcm=FcmParams(n_clusters=args.clusters, rng_seed=args.seed),
                grp=GrpParams(weights=weights, resolution_rho=args.rho))
            report = cmd_decide(cfg, archive, args.schedules)
            print(f"best compromises: {report.files['bcs']} "
                  f"({len(report.bcs_indices)} rows, overall best archive "
                  f"index {report.overall_best})")
        elif args.command == "reserve-sweep":
            cfg = RunConfig(scenario_path=_resolve_scenario(args.scenario),
                            out_dir=args.out, step_q=args.q)
            report = cmd_reserve_sweep(cfg, _parse_floats(args.alphas))
            print(f"sweep: {report.files['sweep']}")
        elif args.command == "validate":
            cfg = RunConfig(out_dir=args.out)
            report = cmd_validate(cfg, args.schedule, args.samples, args.seed)
            print(f"coverage: {report.files['coverage']} "
                  f"(min {report.coverage.min():.4f})")
        else:  # pragma: no cover - argparse enforces the choices
            return EXIT_PARSE
    except ScenarioValidationError as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ScenarioParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InfeasibleScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InfeasibleScheduleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print("stage timings:", file=sys.stderr)
    _print_timings(report.timings)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
