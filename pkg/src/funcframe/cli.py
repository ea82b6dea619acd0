"""Command-line entry point.

Verbs: run (scenario -> trajectory), gen (synthetic scenario), bench
(matrix run), metrics (annotation file -> AKD/AP table), check (validate
a scenario file).

Exit codes: 0 success, 2 parse/schema, 3 infeasible, 4 solver not
converged, 5 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import bench as bench_mod
from .errors import (DegenerateProjection, GraspInfeasible, InfeasibleBoundary,
                     ParseError, RefinementExhausted, SchemaError,
                     SolverDiverged)
from .metrics import DEFAULT_AP_THRESHOLDS, KeypointAnnotationSet, metrics_table
from .pipeline import run_pipeline
from .scenario import load_scenario, save_scenario, save_trajectory
from .synth import KINDS, VARIATIONS, generate_scenario
from .trajopt import OptimConfig

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_INFEASIBLE = 3
EXIT_NOT_CONVERGED = 4
EXIT_INTERNAL = 5

_INFEASIBLE = (InfeasibleBoundary, GraspInfeasible, RefinementExhausted,
               DegenerateProjection)


def _load_optim_overrides(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    fields = {f.name for f in dataclasses.fields(OptimConfig)}
    unknown = set(doc) - fields
    if unknown:
        raise SchemaError(f"config: unknown fields {sorted(unknown)}")
    return doc


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario.seed = args.seed
    if args.config:
        scenario.optim = dataclasses.replace(scenario.optim,
                                             **_load_optim_overrides(args.config))
    traj, report = run_pipeline(scenario, verbose=args.trace)
    if not report.solution.converged:
        print("solver did not converge "
              f"(violation={report.solution.max_constraint_violation:.3e})",
              file=sys.stderr)
        return EXIT_NOT_CONVERGED
    manifest = {
        "stage_seconds": report.stage_seconds,
        "alignment_residuals": {
            "point": report.alignment.report.point_distance,
            "axis": report.alignment.report.axis_angle,
            "plane": report.alignment.report.plane_angle,
        },
        "refinement_iterations": report.alignment.refinement_iterations,
        "final_cost": report.solution.final_cost,
        "violation": report.solution.max_constraint_violation,
        "iterations": report.solution.iterations,
    }
    if args.out:
        save_trajectory(args.out, traj, manifest)
    if args.verbose:
        print(json.dumps(manifest, indent=1))
    print(f"ok: {len(traj.actions)} actions"
          + (f" -> {args.out}" if args.out else ""))
    return EXIT_OK


def _cmd_gen(args) -> int:
    scenario = generate_scenario(args.kind, args.variation, args.seed or 0)
    save_scenario(args.out, scenario)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    kinds = args.kinds.split(",") if args.kinds else list(KINDS)
    variations = args.variations.split(",") if args.variations else list(VARIATIONS)
    progress = None
    if args.verbose:
        def progress(rec):
            tag = "ok" if rec["success"] else rec["failure"]
            print(f"{rec['kind']}/{rec['variation']}/seed{rec['seed']}: {tag}")
    override = None
    if args.config:
        override = OptimConfig(**_load_optim_overrides(args.config))
    result = bench_mod.run_benchmark(kinds, variations, args.seeds,
                                     optim_override=override,
                                     progress=progress)
    print(bench_mod.format_table(result, kinds, variations))
    if args.out:
        result.save(args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_metrics(args) -> int:
    with open(args.annotations) as fh:
        doc = json.load(fh)
    ann = KeypointAnnotationSet(np.asarray(doc["ground_truth"], float),
                                np.asarray(doc["predictions"], float))
    thresholds = (tuple(float(t) for t in args.thresholds.split(","))
                  if args.thresholds else DEFAULT_AP_THRESHOLDS)
    table = metrics_table(ann, thresholds)
    for key, value in table.items():
        print(f"{key}: {value:.4f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(table, fh, indent=1)
            fh.write("\n")
    return EXIT_OK


def _cmd_check(args) -> int:
    load_scenario(args.scenario)
    print(f"{args.scenario}: ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="funcframe",
        description="retarget a demonstrated tool trajectory to a new tool")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="scenario file -> trajectory file")
    p.add_argument("scenario")
    p.add_argument("--out", help="output trajectory JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", help="JSON file of solver option overrides")
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--trace", action="store_true",
                   help="print solver iteration records")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("gen", help="generate a synthetic scenario")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--variation", choices=VARIATIONS, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("bench", help="run the benchmark matrix")
    p.add_argument("--kinds", help="comma-separated (default: all)")
    p.add_argument("--variations", help="comma-separated (default: all)")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--config", help="JSON file of solver option overrides")
    p.add_argument("--out", help="output table JSON")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("metrics", help="keypoint-transfer metrics")
    p.add_argument("annotations", help="JSON with ground_truth + predictions")
    p.add_argument("--thresholds", help="comma-separated pixel thresholds")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("check", help="validate a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=_cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except _INFEASIBLE as exc:
        stage = getattr(exc, "pipeline_stage", None)
        where = f" (stage: {stage})" if stage else ""
        print(f"infeasible: {exc}{where}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverDiverged as exc:
        print(f"solver diverged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
