"""End-to-end retargeting: scenario in, end-effector trajectory out.

Stage order: target-frame detection, re-expression into the target
frame, frame construction, primitive alignment with evaluator-guided
refinement, reference warping, constrained solve, end-effector mapping.
A failing stage re-raises its own error tagged with the stage name
(`exc.pipeline_stage`).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .alignment import (AlignmentContext, AlignmentResult, RefinementConfig,
                        geometric_evaluator, initial_alignment,
                        refine_alignment)
from .execution import (EndEffectorTrajectory, GraspSpec, sample_grasp_poses,
                        select_grasp, to_end_effector)
from .frames import (build_frame_trajectory, build_function_frame,
                     detect_target_frame)
from .geometry import Pose
from .keypoints import to_target_frame
from .scenario import Scenario
from .trajopt import Problem, Solution, solve, warp_reference

MAX_PROXY_POINTS = 64  # keypoints plus farthest-point-sampled cloud points


@dataclass(eq=False)
class PipelineReport:
    stage_seconds: dict = field(default_factory=dict)
    target_pose_in_camera: Pose | None = None
    alignment: AlignmentResult | None = None
    solution: Solution | None = None
    problem: Problem | None = None
    warp_angle: float | None = None


def _farthest_point_sample(points: np.ndarray, k: int) -> np.ndarray:
    """Deterministic FPS starting from index 0."""
    points = np.asarray(points, float).reshape(-1, 3)
    if points.shape[0] <= k:
        return points
    chosen = [0]
    dist = np.linalg.norm(points - points[0], axis=1)
    for _ in range(k - 1):
        idx = int(dist.argmax())
        chosen.append(idx)
        dist = np.minimum(dist, np.linalg.norm(points - points[idx], axis=1))
    return points[chosen]


class _StageTimer:
    def __init__(self, report: PipelineReport, name: str):
        self.report = report
        self.name = name

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.report.stage_seconds[self.name] = time.perf_counter() - self.t0
        if exc is not None and not hasattr(exc, "pipeline_stage"):
            try:
                exc.pipeline_stage = self.name
            except Exception:
                pass
        return False


def run_pipeline(scenario: Scenario, verbose: bool = False):
    """Execute all stages; returns (EndEffectorTrajectory, PipelineReport)."""
    report = PipelineReport()
    s = scenario

    with _StageTimer(report, "target_frame"):
        target_pose = detect_target_frame(s.target_cloud, s.up_hint)
        report.target_pose_in_camera = target_pose

    with _StageTimer(report, "reexpress"):
        inv = target_pose.inverse()
        demo_tgt = to_target_frame(s.demo, target_pose)
        test_k = s.test_keypoints.transformed(inv)
        test_cloud = inv.apply(np.asarray(s.test_cloud, float)) \
            if len(s.test_cloud) else np.zeros((0, 3))
        target_cloud = inv.apply(np.asarray(s.target_cloud, float))

    with _StageTimer(report, "frames"):
        demo_frames = build_frame_trajectory(demo_tgt, s.up_hint)
        test_frame0 = build_function_frame(test_k, s.up_hint)

    with _StageTimer(report, "alignment"):
        demo_frame_tf = demo_frames.frames[s.plan.t_func]
        ctx = AlignmentContext(test_frame=test_frame0,
                               demo_frame_tf=demo_frame_tf,
                               test_cloud=test_cloud if len(test_cloud) else None,
                               target_cloud=target_cloud)
        result = initial_alignment(test_frame0, demo_frame_tf)
        result = refine_alignment(result, geometric_evaluator,
                                  RefinementConfig(rng_seed=s.seed), ctx)
        report.alignment = result

    with _StageTimer(report, "warp"):
        demo_func0 = demo_tgt.steps[0].func
        warped = warp_reference(demo_frames, demo_func0, test_k.func, s.warp)

    with _StageTimer(report, "solve"):
        proxies_world = [test_k.func, test_k.grasp, test_k.center]
        if len(test_cloud):
            budget = max(0, MAX_PROXY_POINTS - len(proxies_world))
            proxies_world.extend(_farthest_point_sample(test_cloud, budget))
        proxies_world = np.asarray(proxies_world)
        # express proxies in the tool's function frame
        proxies_local = (proxies_world - test_frame0.origin) @ test_frame0.basis
        problem = Problem(reference=warped,
                          pi_init=test_frame0,
                          pi_func=result.aligned_frame,
                          t_func=s.plan.t_func,
                          obstacles=list(s.obstacles),
                          tool_proxy_points=proxies_local,
                          config=s.optim)
        report.problem = problem
        solution = solve(problem, verbose=verbose)
        report.solution = solution

    with _StageTimer(report, "execution"):
        grasp_spec = s.grasp
        if grasp_spec is None:
            # suggested default: approach along the negated grasp vector
            grasp_spec = GraspSpec(grasp_point=test_k.grasp,
                                   approach=-test_frame0.grasp_vector)
        candidates = sample_grasp_poses(grasp_spec, test_frame0)
        grasp = select_grasp(candidates, grasp_spec.standoff,
                             s.obstacles, s.optim.d_min)
        traj = to_end_effector(solution.trajectory, grasp, s.target_in_base,
                               grasp_spec.standoff)

    return traj, report
