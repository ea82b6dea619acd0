"""Function-frame alignment via interaction primitives, plus refinement.

The initial alignment places the test tool's frame onto the demo frame
at the function keyframe by composing three primitive constraints:

1. point: translate the test function point onto the demo function point
2. axis:  rotate the test function axis onto the demo function axis
3. plane: roll about the demo axis until the plane normals match

Rotation happens about the test function point first (axis then plane),
then the function points are translated together, so each primitive's
residual is zero by construction.

A pluggable state evaluator (the shipped default is purely geometric)
accepts or rejects the result; on rejection the failing primitives are
resampled around the initial constraint and the loop repeats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RefinementExhausted
from .frames import Frame
from .geometry import Pose, rotation_about_axis, rotation_between

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class PrimitiveReport:
    """Residuals of the three interaction primitives."""

    point_distance: float   # meters
    axis_angle: float       # radians
    plane_angle: float      # radians


@dataclass(eq=False)
class AlignmentResult:
    transform: Pose            # maps the test tool's initial frame onto the target state
    aligned_frame: Frame       # the test tool's frame after the transform
    report: PrimitiveReport
    refinement_iterations: int = 0
    valid: bool = True


@dataclass(frozen=True)
class Verdict:
    valid: bool
    failing_primitives: frozenset = frozenset()
    note: str = ""

    def __post_init__(self):
        if self.valid != (len(self.failing_primitives) == 0):
            raise ValueError("failing_primitives must be empty iff valid")


@dataclass(frozen=True)
class RefinementConfig:
    point_radii: tuple = (0.01, 0.02, 0.03, 0.04, 0.05)          # meters
    axis_cone_angles: tuple = tuple(np.deg2rad([10, 20, 30, 40]))  # radians
    samples_per_shell: int = 8
    max_iterations: int = 20
    rng_seed: int = 0


@dataclass(eq=False)
class AlignmentContext:
    """Everything the evaluator may look at, all in the target frame."""

    test_frame: Frame
    demo_frame_tf: Frame
    test_cloud: np.ndarray | None = None
    target_cloud: np.ndarray | None = None
    penetration_tol: float = 0.005        # meters into the target AABB
    proximity_tol: float = 0.03           # meters from the demo function point
    axis_angle_tol: float = np.deg2rad(15.0)


def _angle(a: np.ndarray, b: np.ndarray) -> float:
    # atan2 form stays accurate for near-zero angles where arccos loses
    # ~1e-8 of precision
    return float(math.atan2(np.linalg.norm(np.cross(a, b)),
                            float(np.dot(a, b))))


def align_point(test_func: np.ndarray, demo_func_at_tf: np.ndarray) -> Pose:
    """Pure translation taking the test function point onto the demo one."""
    return Pose(np.eye(3),
                np.asarray(demo_func_at_tf, float) - np.asarray(test_func, float))


def align_axes(test_frame: Frame, demo_frame_at_tf: Frame) -> Pose:
    """Rotation (about the test function point) aligning axis then plane."""
    v_t = test_frame.function_axis
    v_d = demo_frame_at_tf.function_axis
    r_axis = rotation_between(v_t, v_d)
    a = r_axis @ test_frame.normal
    b = demo_frame_at_tf.normal
    # signed roll about the demo axis taking a onto b; both are
    # perpendicular to v_d because rotations preserve angles
    theta = math.atan2(float(np.dot(np.cross(a, b), v_d)), float(np.dot(a, b)))
    r = rotation_about_axis(v_d, theta) @ r_axis
    return Pose(r, test_frame.origin - r @ test_frame.origin)


def initial_alignment(test_frame: Frame, demo_frame_at_tf: Frame) -> AlignmentResult:
    """Compose the three primitives; all residuals are ~0 by construction."""
    rot = align_axes(test_frame, demo_frame_at_tf)
    trans = align_point(test_frame.origin, demo_frame_at_tf.origin)
    transform = trans.compose(rot)
    aligned = test_frame.transformed(transform)
    report = PrimitiveReport(
        point_distance=float(np.linalg.norm(aligned.origin - demo_frame_at_tf.origin)),
        axis_angle=_angle(aligned.function_axis, demo_frame_at_tf.function_axis),
        plane_angle=_angle(aligned.normal, demo_frame_at_tf.normal),
    )
    return AlignmentResult(transform, aligned, report, refinement_iterations=0)


def _fibonacci_sphere(n: int, phase: float) -> np.ndarray:
    """n near-uniform unit directions; phase shifts the spiral azimuth."""
    i = np.arange(n)
    z = 1.0 - 2.0 * (i + 0.5) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    az = i * _GOLDEN_ANGLE + phase
    return np.column_stack([r * np.cos(az), r * np.sin(az), z])


def _orthonormal_pair(v: np.ndarray):
    e = np.zeros(3)
    e[int(np.argmin(np.abs(v)))] = 1.0
    e1 = np.cross(v, e)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(v, e1)


def _candidate_demo_frames(demo_frame: Frame, failing: frozenset,
                           cfg: RefinementConfig):
    """Deterministic candidate stream, ordered by (kind, shell, sample).

    Point candidates move the demo frame to shells around the original
    function point; axis/plane candidates tilt the demo frame so its
    function axis lies on cones around the original axis.  Only the
    azimuth phase is randomized, seeded by cfg.rng_seed.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    point_phase = rng.uniform(0.0, 2.0 * math.pi)
    axis_phase = rng.uniform(0.0, 2.0 * math.pi)

    if "point" in failing:
        for radius in cfg.point_radii:
            dirs = _fibonacci_sphere(cfg.samples_per_shell, point_phase)
            for d in dirs:
                shift = Pose(np.eye(3), radius * d)
                yield demo_frame.transformed(shift)
    if failing & {"axis", "plane"}:
        v = demo_frame.function_axis
        e1, e2 = _orthonormal_pair(v)
        for ang in cfg.axis_cone_angles:
            for j in range(cfg.samples_per_shell):
                az = 2.0 * math.pi * j / cfg.samples_per_shell + axis_phase
                new_v = (math.cos(ang) * v
                         + math.sin(ang) * (math.cos(az) * e1 + math.sin(az) * e2))
                rot = rotation_between(v, new_v)
                about_origin = Pose(rot, demo_frame.origin - rot @ demo_frame.origin)
                yield demo_frame.transformed(about_origin)


def refine_alignment(initial: AlignmentResult, evaluator,
                     cfg: RefinementConfig,
                     context: AlignmentContext) -> AlignmentResult:
    """Accept / diagnose / resample loop around initial_alignment.

    `evaluator` is any callable (AlignmentResult, AlignmentContext) ->
    Verdict.  Raises RefinementExhausted (carrying the best-scoring
    candidate, flagged not valid) after cfg.max_iterations candidate
    evaluations beyond the initial one.
    """
    verdict = evaluator(initial, context)
    if verdict.valid:
        return initial

    demo_frame = context.demo_frame_tf
    best = initial
    best_verdict = verdict
    best_score = (len(verdict.failing_primitives), 0.0)
    iterations = 0
    for cand_demo in _candidate_demo_frames(demo_frame,
                                            verdict.failing_primitives, cfg):
        if iterations >= cfg.max_iterations:
            break
        iterations += 1
        result = initial_alignment(context.test_frame, cand_demo)
        result.refinement_iterations = iterations
        cand_verdict = evaluator(result, context)
        if cand_verdict.valid:
            return result
        score = (len(cand_verdict.failing_primitives),
                 float(np.linalg.norm(result.aligned_frame.origin
                                      - demo_frame.origin)))
        if score < best_score:
            best, best_verdict, best_score = result, cand_verdict, score
    best.valid = False
    raise RefinementExhausted(
        f"no valid alignment after {iterations} candidate evaluations",
        best=best, verdict=best_verdict)


def _max_penetration(points: np.ndarray, cloud: np.ndarray) -> float:
    """Deepest penetration of any point into the cloud's AABB (0 if none)."""
    lo = cloud.min(axis=0)
    hi = cloud.max(axis=0)
    inside = np.all((points >= lo) & (points <= hi), axis=1)
    if not inside.any():
        return 0.0
    p = points[inside]
    depth = np.minimum(p - lo, hi - p).min(axis=1)
    return float(depth.max())


def geometric_evaluator(result: AlignmentResult,
                        context: AlignmentContext) -> Verdict:
    """Deterministic stand-in for a semantic state check.

    Valid iff the transformed test cloud does not sink deeper than
    `penetration_tol` into the target AABB, the aligned function point
    stays within `proximity_tol` of the demo function point, and the
    aligned function axis stays within `axis_angle_tol` of the demo axis.
    """
    failing = set()
    demo = context.demo_frame_tf
    aligned = result.aligned_frame

    if context.test_cloud is not None and context.target_cloud is not None:
        moved = result.transform.apply(np.asarray(context.test_cloud, float))
        pen = _max_penetration(moved, np.asarray(context.target_cloud, float))
        if pen > context.penetration_tol:
            failing.add("point")
    if np.linalg.norm(aligned.origin - demo.origin) > context.proximity_tol:
        failing.add("point")
    if _angle(aligned.function_axis, demo.function_axis) > context.axis_angle_tol:
        failing.add("axis")
        failing.add("plane")

    if failing:
        return Verdict(False, frozenset(failing), "geometric check failed")
    return Verdict(True, frozenset(), "ok")
