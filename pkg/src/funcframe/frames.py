"""Function frames and PCA-based target frame detection.

A function frame is a pose-like record anchored at the tool's function
point.  Its axes are built from two derived directions:

* function axis v: unit vector from the center point to the function point
* grasp vector  u: unit vector from the function point to the grasp point
* plane normal  n: normalize(u x v)

Basis convention (fixed package-wide): columns are [v, n x v, n], so x
is the function axis and z is the normal of the function plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, DegenerateKeypoints
from .geometry import Pose
from .keypoints import KeypointTrajectory, Keypoints

# below this cross-product norm the keypoints are treated as collinear
COLLINEAR_TOL = 1e-6

DEFAULT_UP_HINT = np.array([0.0, 0.0, 1.0])


@dataclass(eq=False)
class Frame:
    """Function frame: origin at the function point, columns [v, n x v, n].

    `grasp_vector` is carried along where known (frames built directly
    from keypoints, or transported rigidly); frames reconstructed by the
    optimizer may leave it None.
    """

    origin: np.ndarray
    basis: np.ndarray
    grasp_vector: np.ndarray | None = None

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        self.basis = np.asarray(self.basis, dtype=float)
        if self.grasp_vector is not None:
            self.grasp_vector = np.asarray(self.grasp_vector, dtype=float)

    @property
    def function_axis(self) -> np.ndarray:
        return self.basis[:, 0]

    @property
    def normal(self) -> np.ndarray:
        return self.basis[:, 2]

    def as_pose(self) -> Pose:
        return Pose(self.basis, self.origin)

    def transformed(self, pose: Pose) -> "Frame":
        u = None if self.grasp_vector is None else pose.r @ self.grasp_vector
        return Frame(pose.apply(self.origin), pose.r @ self.basis, u)


@dataclass(eq=False)
class FrameTrajectory:
    frames: list  # list[Frame]
    dt: float

    def __len__(self):
        return len(self.frames)


def _fallback_normal(v: np.ndarray, up_hint: np.ndarray | None) -> np.ndarray:
    # collinear keypoints: take the normal from up_hint (or +z), falling
    # back to +y if that is parallel to v as well
    for e in (up_hint if up_hint is not None else DEFAULT_UP_HINT,
              np.array([0.0, 1.0, 0.0])):
        c = np.cross(np.asarray(e, dtype=float), v)
        if np.linalg.norm(c) >= COLLINEAR_TOL:
            return c / np.linalg.norm(c)
    raise DegenerateKeypoints("no valid fallback normal")  # unreachable


def build_function_frame(k: Keypoints,
                         up_hint: np.ndarray | None = None) -> Frame:
    """Construct the function frame for one keypoint triple."""
    dv = k.func - k.center
    du = k.grasp - k.func
    if np.linalg.norm(dv) <= COLLINEAR_TOL:
        raise DegenerateKeypoints("function and center points coincide")
    if np.linalg.norm(du) <= COLLINEAR_TOL:
        raise DegenerateKeypoints("function and grasp points coincide")
    v = dv / np.linalg.norm(dv)
    u = du / np.linalg.norm(du)
    c = np.cross(u, v)
    if np.linalg.norm(c) < COLLINEAR_TOL:
        n = _fallback_normal(v, up_hint)
    else:
        n = c / np.linalg.norm(c)
    basis = np.column_stack([v, np.cross(n, v), n])
    return Frame(origin=k.func.copy(), basis=basis, grasp_vector=u)


def build_frame_trajectory(traj: KeypointTrajectory,
                           up_hint: np.ndarray | None = None) -> FrameTrajectory:
    frames = []
    for i, k in enumerate(traj.steps):
        try:
            frames.append(build_function_frame(k, up_hint))
        except DegenerateKeypoints as exc:
            raise DegenerateKeypoints(f"step {i}: {exc}") from exc
    return FrameTrajectory(frames, traj.dt)


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    """Flip so the largest-|component| entry is positive (lowest index
    wins ties)."""
    k = int(np.argmax(np.abs(vec)))
    # resolve exact ties toward the lowest index
    mx = np.abs(vec).max()
    for i in range(3):
        if abs(abs(vec[i]) - mx) <= 0.0:
            k = i
            break
    return -vec if vec[k] < 0 else vec


def detect_target_frame(cloud: np.ndarray,
                        up_hint: np.ndarray = DEFAULT_UP_HINT) -> Pose:
    """Object-centered frame from a segmented point cloud.

    Origin is the AABB center.  The z axis is the PCA eigenvector most
    aligned with `up_hint` (sign-flipped so the dot is >= 0); x is the
    remaining eigenvector with the largest eigenvalue, with the
    deterministic sign rule; y completes a right-handed basis.
    """
    cloud = np.asarray(cloud, dtype=float).reshape(-1, 3)
    if cloud.shape[0] < 3:
        raise DegenerateInput("target cloud needs at least 3 points")
    center = 0.5 * (cloud.min(axis=0) + cloud.max(axis=0))
    centered = cloud - cloud.mean(axis=0)
    cov = centered.T @ centered / cloud.shape[0]
    evals, evecs = np.linalg.eigh(cov)  # ascending
    if evals[1] <= 1e-12 * max(1.0, evals[2]):
        raise DegenerateInput("target cloud is collinear")
    up = np.asarray(up_hint, dtype=float)
    zi = int(np.argmax(np.abs(evecs.T @ up)))
    z = evecs[:, zi]
    if np.dot(z, up) < 0:
        z = -z
    rest = [i for i in range(3) if i != zi]
    xi = max(rest, key=lambda i: evals[i])
    x = _fix_sign(evecs[:, xi])
    y = np.cross(z, x)
    return Pose(np.column_stack([x, y, z]), center)
