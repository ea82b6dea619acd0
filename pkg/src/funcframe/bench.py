"""Benchmark matrix over synthetic scenarios.

Success is geometric: the solve converged, alignment residuals are tiny,
and the velocity / clearance / boundary invariants hold when re-checked
on the returned trajectory.  Per-run failures are recorded, not raised.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import FuncFrameError
from .pipeline import run_pipeline
from .synth import KINDS, VARIATIONS, generate_scenario
from .trajopt import OptimConfig, point_box_distance, _log_batch, _traj_arrays

RESIDUAL_TOL = 1e-9
POSTHOC_TOL = 1e-6


def check_solution_invariants(problem, solution) -> list:
    """Re-verify boundary, velocity and clearance constraints post hoc.

    Returns a list of violated invariant names (empty when all hold).
    """
    bad = []
    cfg = problem.config
    p, r = _traj_arrays(solution.trajectory)
    dt = solution.trajectory.dt

    if (np.linalg.norm(p[0] - problem.pi_init.origin) > POSTHOC_TOL
            or np.abs(r[0] - problem.pi_init.basis).max() > POSTHOC_TOL):
        bad.append("boundary_init")
    tf = problem.t_func
    if (np.linalg.norm(p[tf] - problem.pi_func.origin) > POSTHOC_TOL
            or np.abs(r[tf] - problem.pi_func.basis).max() > POSTHOC_TOL):
        bad.append("boundary_func")

    steps = np.linalg.norm(p[1:] - p[:-1], axis=1)
    if steps.max(initial=0.0) > cfg.v_max * dt + POSTHOC_TOL:
        bad.append("velocity")
    ang = np.linalg.norm(_log_batch(np.einsum("tij,tkj->tik", r[1:], r[:-1])),
                         axis=1)
    if ang.max(initial=0.0) > cfg.omega_max * dt + POSTHOC_TOL:
        bad.append("angular_velocity")

    if problem.obstacles and problem.tool_proxy_points is not None:
        world = np.einsum("tij,mj->tmi", r, problem.tool_proxy_points) \
            + p[:, None, :]
        for obs in problem.obstacles:
            dmin = min(point_box_distance(q, obs)
                       for q in world.reshape(-1, 3))
            if dmin < cfg.d_min - POSTHOC_TOL:
                bad.append("clearance")
                break
    return bad


@dataclass(eq=False)
class BenchResult:
    cells: dict = field(default_factory=dict)   # (kind, variation) -> fraction
    runs: list = field(default_factory=list)    # per-run records

    def overall(self) -> float:
        return float(np.mean([r["success"] for r in self.runs]))

    def to_dict(self) -> dict:
        return {
            "cells": [{"kind": k, "variation": v, "success": frac}
                      for (k, v), frac in sorted(self.cells.items())],
            "overall": self.overall(),
            "runs": self.runs,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")


def _run_once(kind, variation, seed, optim_override) -> dict:
    record = {"kind": kind, "variation": variation, "seed": seed,
              "success": False, "failure": None, "cost_series": [],
              "residuals": None}
    scenario = generate_scenario(kind, variation, seed)
    if optim_override is not None:
        scenario.optim = optim_override
    try:
        _, report = run_pipeline(scenario)
    except FuncFrameError as exc:
        record["failure"] = type(exc).__name__
        record["failed_stage"] = getattr(exc, "pipeline_stage", None)
        return record

    res = report.alignment.report
    record["residuals"] = {"point": res.point_distance,
                           "axis": res.axis_angle,
                           "plane": res.plane_angle}
    sol = report.solution
    # merit at the last inner iteration of each outer pass, plot-ready
    by_outer = {}
    for outer, inner, merit, viol in sol.trace:
        by_outer[outer] = merit
    record["cost_series"] = [by_outer[o] for o in sorted(by_outer)]
    record["final_cost"] = sol.final_cost
    record["violation"] = sol.max_constraint_violation
    record["iterations"] = sol.iterations

    if not sol.converged:
        record["failure"] = "NotConverged"
        return record
    if max(res.point_distance, res.axis_angle, res.plane_angle) > RESIDUAL_TOL:
        record["failure"] = "AlignmentResidual"
        return record
    bad = check_solution_invariants(report.problem, sol)
    if bad:
        record["failure"] = "InvariantViolated:" + ",".join(bad)
        return record
    record["success"] = True
    return record


def run_benchmark(kinds=KINDS, variations=VARIATIONS, n_seeds: int = 10,
                  optim_override: OptimConfig | None = None,
                  progress=None) -> BenchResult:
    """Run the kinds x variations x seeds matrix; deterministic per seed."""
    result = BenchResult()
    for kind in kinds:
        for variation in variations:
            successes = 0
            for seed in range(n_seeds):
                record = _run_once(kind, variation, seed, optim_override)
                result.runs.append(record)
                successes += int(record["success"])
                if progress is not None:
                    progress(record)
            result.cells[(kind, variation)] = successes / n_seeds
    return result


def format_table(result: BenchResult, kinds=KINDS, variations=VARIATIONS) -> str:
    lines = ["kind      " + "".join(f"{v:>10}" for v in variations)]
    for kind in kinds:
        row = f"{kind:<10}"
        for v in variations:
            frac = result.cells.get((kind, v))
            row += f"{frac:>10.2f}" if frac is not None else f"{'-':>10}"
        lines.append(row)
    lines.append(f"overall   {result.overall():.3f}")
    return "\n".join(lines)
