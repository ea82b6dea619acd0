"""3D rotations, rigid transforms and rigid point-set fitting.

Conventions used everywhere in this package:

* vectors are numpy arrays of shape (3,), float64
* rotation matrices are (3, 3) numpy arrays acting on column vectors
  (``world = R @ local``), columns are the frame axes
* axis-angle vectors encode ``angle * unit_axis`` with angle in [0, pi]

All functions are pure and never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput

# Orthonormality / det tolerance for rotation matrices, and the trace
# threshold selecting the pi branch of the log map.  Fixed module
# constants; tests may reference them but nothing overrides them at
# runtime.
ROT_TOL = 1e-9
PI_BRANCH_TRACE_TOL = 1e-9
ANTIPARALLEL_DOT_TOL = 1e-9


def normalize(v: np.ndarray) -> np.ndarray:
    """Return v / ||v||, raising on ~zero input."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise DegenerateInput("cannot normalize a near-zero vector")
    return v / n


def hat(w: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix such that hat(w) @ v == cross(w, v)."""
    x, y, z = w
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def is_rotation(r: np.ndarray, tol: float = ROT_TOL) -> bool:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        return False
    return (np.abs(r.T @ r - np.eye(3)).max() <= tol
            and abs(np.linalg.det(r) - 1.0) <= tol)


def exp_so3(omega: np.ndarray) -> np.ndarray:
    """Rodrigues formula: axis-angle vector -> rotation matrix."""
    omega = np.asarray(omega, dtype=float)
    theta = np.linalg.norm(omega)
    w = hat(omega)
    if theta < 1e-12:
        # second-order series, exact to machine precision at this scale
        return np.eye(3) + w + 0.5 * (w @ w)
    return (np.eye(3)
            + (np.sin(theta) / theta) * w
            + ((1.0 - np.cos(theta)) / theta ** 2) * (w @ w))


def _vee(m: np.ndarray) -> np.ndarray:
    return np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])


def log_so3(r: np.ndarray) -> np.ndarray:
    """Inverse of exp_so3; returns omega with ||omega|| in [0, pi].

    The pi branch (trace <= -1 + PI_BRANCH_TRACE_TOL) extracts the axis
    from the largest diagonal of (R + I)/2 and fixes the sign by making
    the first nonzero component positive, which keeps the branch
    deterministic.
    """
    r = np.asarray(r, dtype=float)
    tr = np.trace(r)
    if tr <= -1.0 + PI_BRANCH_TRACE_TOL:
        s = 0.5 * (r + np.eye(3))
        k = int(np.argmax(np.diag(s)))
        axis = s[:, k] / np.sqrt(s[k, k])
        axis = axis / np.linalg.norm(axis)
        for c in axis:
            if abs(c) > 1e-12:
                if c < 0.0:
                    axis = -axis
                break
        return np.pi * axis
    cos_t = np.clip(0.5 * (tr - 1.0), -1.0, 1.0)
    theta = np.arccos(cos_t)
    if theta < 1e-12:
        return 0.5 * _vee(r)
    return (theta / (2.0 * np.sin(theta))) * _vee(r)


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rotation by `angle` radians about a unit `axis` (left fixed)."""
    return exp_so3(np.asarray(axis, dtype=float) * float(angle))


def rotation_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimal rotation taking unit vector a onto unit vector b.

    Antiparallel inputs use the deterministic tie-break: the rotation
    axis is normalize(a x e) where e is the standard basis vector with
    the smallest |component| in a (lowest index wins ties).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = float(np.dot(a, b))
    if d <= -1.0 + ANTIPARALLEL_DOT_TOL:
        e = np.zeros(3)
        e[int(np.argmin(np.abs(a)))] = 1.0
        axis = normalize(np.cross(a, e))
        return rotation_about_axis(axis, np.pi)
    c = np.cross(a, b)
    # closed form of Rodrigues for this case; stable since 1 + d is
    # bounded away from zero here
    w = hat(c)
    return np.eye(3) + w + (w @ w) / (1.0 + d)


@dataclass(eq=False)
class Pose:
    """Rigid transform: p_out = r @ p_in + t."""

    r: np.ndarray
    t: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.t = np.asarray(self.t, dtype=float)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    def compose(self, other: "Pose") -> "Pose":
        """self applied after other: (self * other)(p) = self(other(p))."""
        return Pose(self.r @ other.r, self.r @ other.t + self.t)

    def inverse(self) -> "Pose":
        rt = self.r.T
        return Pose(rt, -rt @ self.t)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform a point (3,) or point array (..., 3)."""
        points = np.asarray(points, dtype=float)
        return points @ self.r.T + self.t

    def is_close(self, other: "Pose", tol: float = ROT_TOL) -> bool:
        return (np.abs(self.r - other.r).max() <= tol
                and np.abs(self.t - other.t).max() <= tol)


def compose(a: Pose, b: Pose) -> Pose:
    return a.compose(b)


def invert(a: Pose) -> Pose:
    return a.inverse()


def transform_point(a: Pose, p: np.ndarray) -> np.ndarray:
    return a.apply(p)


def fit_rigid_transform(src: np.ndarray, dst: np.ndarray) -> Pose:
    """Least-squares rigid transform mapping src onto dst (Kabsch/SVD).

    Minimizes sum ||R @ src_i + t - dst_i||^2 with det(R) = +1 enforced
    via the usual sign correction on the smallest singular direction.

    Raises DegenerateInput for < 3 points or a collinear source set.
    """
    src = np.asarray(src, dtype=float).reshape(-1, 3)
    dst = np.asarray(dst, dtype=float).reshape(-1, 3)
    if src.shape != dst.shape:
        raise DegenerateInput("src and dst must have equal shapes")
    if src.shape[0] < 3:
        raise DegenerateInput("need at least 3 point pairs")
    cs = src.mean(axis=0)
    cd = dst.mean(axis=0)
    a = src - cs
    b = dst - cd
    # collinearity check: second singular value of the centered source
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[1] <= 1e-9 * max(1.0, sv[0]):
        raise DegenerateInput("source points are collinear")
    h = a.T @ b
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d == 0.0:
        d = 1.0
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    t = cd - r @ cs
    return Pose(r, t)
