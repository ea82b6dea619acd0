"""Mapping solved function-frame trajectories to end-effector actions.

The grasp pose is rigidly attached to the tool at the first frame; every
subsequent action is the tool frame at time t composed with that fixed
attachment, expressed in the robot base frame.  No inverse kinematics:
actions are task-space poses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GraspInfeasible, LengthMismatch, PlanFailed
from .frames import Frame, FrameTrajectory
from .geometry import Pose, rotation_about_axis
from .trajopt import point_box_distance


@dataclass(eq=False)
class GraspSpec:
    grasp_point: np.ndarray        # target-frame position of the grasp
    approach: np.ndarray           # unit motion direction toward the grasp
    standoff: float = 0.10         # pregrasp backoff along -approach, meters
    roll_samples: int = 8

    def __post_init__(self):
        self.grasp_point = np.asarray(self.grasp_point, dtype=float)
        self.approach = np.asarray(self.approach, dtype=float)
        n = np.linalg.norm(self.approach)
        if n < 1e-9:
            raise ValueError("approach direction must be nonzero")
        self.approach = self.approach / n
        if self.standoff < 0:
            raise ValueError("standoff must be >= 0")
        if self.roll_samples < 1:
            raise ValueError("roll_samples must be >= 1")


@dataclass(eq=False)
class EndEffectorTrajectory:
    actions: list  # list[Pose], robot base frame
    dt: float
    pregrasp: Pose
    grasp: Pose


@dataclass(eq=False)
class ChainResult:
    trajectories: list  # list[EndEffectorTrajectory]
    manifest: list      # plan execution order


def sample_grasp_poses(spec: GraspSpec, tool_frame0: Frame) -> list:
    """Candidate gripper poses at the grasp point.

    All candidates share the position; z = -approach; the x axis sweeps
    [0, 2pi) uniformly about z, ordered by roll index.  The sweep starts
    from the tool's function axis projected off z where possible so the
    first candidate relates deterministically to the tool geometry.
    """
    z = -spec.approach
    seed = tool_frame0.function_axis - np.dot(tool_frame0.function_axis, z) * z
    if np.linalg.norm(seed) < 1e-9:
        e = np.zeros(3)
        e[int(np.argmin(np.abs(z)))] = 1.0
        seed = e - np.dot(e, z) * z
    x0 = seed / np.linalg.norm(seed)
    poses = []
    for i in range(spec.roll_samples):
        roll = rotation_about_axis(z, 2.0 * np.pi * i / spec.roll_samples)
        x = roll @ x0
        poses.append(Pose(np.column_stack([x, np.cross(z, x), z]),
                          spec.grasp_point.copy()))
    return poses


def pregrasp_pose(grasp: Pose, standoff: float) -> Pose:
    """Back the gripper off along its own z axis (i.e. along -approach)."""
    return Pose(grasp.r.copy(), grasp.t + standoff * grasp.r[:, 2])


def select_grasp(candidates, standoff: float, obstacles, d_min: float) -> Pose:
    """First candidate whose grasp and pregrasp positions clear every
    obstacle by d_min; ties broken by roll index."""
    for pose in candidates:
        pre = pregrasp_pose(pose, standoff)
        ok = all(point_box_distance(q, obs) >= d_min
                 for obs in obstacles for q in (pose.t, pre.t))
        if ok:
            return pose
    raise GraspInfeasible("no grasp candidate clears the obstacle set")


def to_end_effector(frames: FrameTrajectory, grasp: Pose,
                    target_in_base: Pose,
                    standoff: float = 0.10) -> EndEffectorTrajectory:
    """Express the frame trajectory as end-effector actions in the base.

    The grasp pose (target frame, at time 0) is rigidly attached to the
    tool: G_rel = frame_0^-1 * grasp, and a_t = target_in_base * frame_t
    * G_rel.
    """
    if len(frames) == 0:
        raise LengthMismatch("frame trajectory is empty")
    g_rel = frames.frames[0].as_pose().inverse().compose(grasp)
    actions = [target_in_base.compose(f.as_pose()).compose(g_rel)
               for f in frames.frames]
    grasp_base = target_in_base.compose(grasp)
    pregrasp_base = target_in_base.compose(pregrasp_pose(grasp, standoff))
    return EndEffectorTrajectory(actions=actions, dt=frames.dt,
                                 pregrasp=pregrasp_base, grasp=grasp_base)


def chain_plans(plans, obstacles=(), d_min: float = 0.01) -> ChainResult:
    """Map a sequence of (Solution, GraspSpec, target_in_base) plans.

    Stops at the first plan whose solve did not converge, raising
    PlanFailed with that plan's index; no later plan is mapped.
    """
    if not plans:
        raise LengthMismatch("no plans to chain")
    trajectories = []
    manifest = []
    for i, (solution, spec, target_in_base) in enumerate(plans):
        if not solution.converged:
            raise PlanFailed(f"plan {i} did not converge", plan_index=i)
        frames = solution.trajectory
        candidates = sample_grasp_poses(spec, frames.frames[0])
        grasp = (select_grasp(candidates, spec.standoff, obstacles, d_min)
                 if obstacles else candidates[0])
        trajectories.append(
            to_end_effector(frames, grasp, target_in_base, spec.standoff))
        manifest.append(i)
    return ChainResult(trajectories=trajectories, manifest=manifest)
