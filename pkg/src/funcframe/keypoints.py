"""Functional keypoint records and keypoint trajectory bookkeeping.

A tool at one timestep is abstracted by three 3D points: the function
point (where the tool acts on the target), the grasp point (where it is
held) and the center point (its bounding-box center).  Keyframe indices
come in as data; nothing here looks at images.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateKeypoints, EmptyCloud, LengthMismatch
from .geometry import Pose

DEFAULT_DT = 1.0 / 30.0  # seconds per step when input files omit dt

# func and center must be distinct for a frame to exist
MIN_KEYPOINT_SEPARATION = 1e-6


@dataclass(eq=False)
class Keypoints:
    """The (function, grasp, center) point triple for one timestep."""

    func: np.ndarray
    grasp: np.ndarray
    center: np.ndarray

    def __post_init__(self):
        self.func = np.asarray(self.func, dtype=float)
        self.grasp = np.asarray(self.grasp, dtype=float)
        self.center = np.asarray(self.center, dtype=float)
        if not (np.isfinite(self.func).all() and np.isfinite(self.grasp).all()
                and np.isfinite(self.center).all()):
            raise DegenerateKeypoints("keypoints must be finite")
        if np.linalg.norm(self.func - self.center) <= MIN_KEYPOINT_SEPARATION:
            raise DegenerateKeypoints("function and center points coincide")

    def transformed(self, pose: Pose) -> "Keypoints":
        return Keypoints(pose.apply(self.func), pose.apply(self.grasp),
                         pose.apply(self.center))


@dataclass(frozen=True)
class FunctionPlan:
    """Step count plus the grasping and function keyframe indices."""

    n_steps: int
    t_grasp: int
    t_func: int

    def __post_init__(self):
        if not (0 < self.t_grasp < self.t_func < self.n_steps - 1):
            raise ValueError(
                f"keyframes must satisfy 0 < t_grasp < t_func < n_steps - 1, "
                f"got t_grasp={self.t_grasp}, t_func={self.t_func}, "
                f"n_steps={self.n_steps}")


@dataclass(eq=False)
class KeypointTrajectory:
    steps: list  # list[Keypoints]
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    def __len__(self):
        return len(self.steps)


def center_from_points(cloud: np.ndarray) -> np.ndarray:
    """Midpoint of the axis-aligned bounding box of a point cloud.

    The box is axis-aligned in whatever frame the cloud is expressed in.
    """
    cloud = np.asarray(cloud, dtype=float).reshape(-1, 3)
    if cloud.shape[0] == 0:
        raise EmptyCloud("cannot take the bounding-box center of no points")
    return 0.5 * (cloud.min(axis=0) + cloud.max(axis=0))


def propagate_keypoints(initial: Keypoints, relative_transforms,
                        dt: float = DEFAULT_DT) -> KeypointTrajectory:
    """Roll per-step rigid motions forward from an initial keypoint triple.

    Step 0 is `initial`; step t+1 applies relative_transforms[t] to every
    keypoint of step t.
    """
    steps = [initial]
    for rel in relative_transforms:
        steps.append(steps[-1].transformed(rel))
    return KeypointTrajectory(steps, dt)


def relative_transforms_from_tracks(tracks) -> list:
    """Per-step rigid fits between consecutive frames of tracked points.

    `tracks` is a sequence of frames, each an (M, 3) array of the same M
    identity-paired points.  Returns len(tracks) - 1 poses.
    """
    from .geometry import fit_rigid_transform

    frames = [np.asarray(f, dtype=float).reshape(-1, 3) for f in tracks]
    if len(frames) >= 2:
        m = frames[0].shape[0]
        if any(f.shape[0] != m for f in frames):
            raise LengthMismatch("all frames must track the same points")
    return [fit_rigid_transform(frames[i], frames[i + 1])
            for i in range(len(frames) - 1)]


def to_target_frame(traj: KeypointTrajectory,
                    target_pose_in_camera: Pose) -> KeypointTrajectory:
    """Re-express every keypoint in the target object's frame."""
    inv = target_pose_in_camera.inverse()
    return KeypointTrajectory([k.transformed(inv) for k in traj.steps],
                              traj.dt)
