"""Deterministic synthetic scenarios for the five benchmark functions.

Each scenario builds a parametric tool with analytically known keypoints,
synthesizes a smooth rigid demo motion through a function keyframe, and
places everything in a randomized camera layout.  Three variation levels:

* spatial:  same tool, new layout
* instance: same topology, resized tool (scale factor recorded in meta)
* category: different parametric family sharing the function
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .execution import GraspSpec
from .frames import Frame
from .geometry import Pose, exp_so3, log_so3
from .keypoints import FunctionPlan, Keypoints, KeypointTrajectory
from .scenario import Scenario
from .trajopt import Obstacle, OptimConfig, WarpSpec

KINDS = ("pour", "scoop", "cut", "brush", "pound")
VARIATIONS = ("spatial", "instance", "category")

N_STEPS = 40
T_GRASP = 6
T_FUNC = 30
DT = 1.0 / 30.0


@dataclass(frozen=True)
class _KindParams:
    target_half_extents: tuple   # x > y > z, keeps the PCA axes distinct
    clearance: float             # function-point height above the target top
    tilt: float                  # rotation about +y at the function keyframe
    func_len: float              # center -> function point distance
    grasp_len: float             # center -> grasp point distance


_KIND_PARAMS = {
    "pour": _KindParams((0.080, 0.060, 0.030), 0.060, 0.70, 0.060, 0.070),
    "scoop": _KindParams((0.090, 0.070, 0.030), 0.020, 0.35, 0.080, 0.075),
    "cut": _KindParams((0.110, 0.080, 0.015), 0.010, 0.15, 0.070, 0.065),
    "brush": _KindParams((0.100, 0.075, 0.012), 0.010, 0.10, 0.055, 0.070),
    "pound": _KindParams((0.050, 0.035, 0.020), 0.010, 0.20, 0.065, 0.080),
}


def _smoothstep(s: float) -> float:
    s = min(max(s, 0.0), 1.0)
    return s * s * (3.0 - 2.0 * s)


def _box_surface_cloud(half_extents: np.ndarray, per_face: int = 5) -> np.ndarray:
    """Deterministic grid over the six faces of an origin-centered box."""
    h = np.asarray(half_extents, float)
    lin = np.linspace(-1.0, 1.0, per_face)
    pts = []
    for axis in range(3):
        u, v = [i for i in range(3) if i != axis]
        for side in (-1.0, 1.0):
            for a in lin:
                for b in lin:
                    p = np.zeros(3)
                    p[axis] = side * h[axis]
                    p[u] = a * h[u]
                    p[v] = b * h[v]
                    pts.append(p)
    return np.unique(np.round(np.array(pts), 12), axis=0)


def _tool_cloud(k: Keypoints, rng: np.random.Generator,
                n_per_segment: int = 40, jitter: float = 0.006) -> np.ndarray:
    """Points along the center->func and center->grasp segments with a
    little radial jitter, so the tool has volume but a known skeleton."""
    pts = []
    for end in (k.func, k.grasp):
        for s in np.linspace(0.0, 1.0, n_per_segment):
            base = (1.0 - s) * k.center + s * end
            pts.append(base + rng.uniform(-jitter, jitter, 3))
    return np.array(pts)


def _demo_motion(k0: Keypoints, params: _KindParams,
                 interaction_point: np.ndarray) -> list:
    """N keypoint triples: static until t_grasp, smooth approach+tilt to
    the interaction point at t_func, then a small lift."""
    r_func = exp_so3(np.array([0.0, params.tilt, 0.0]))
    w_func = log_so3(r_func)
    steps = []
    for t in range(N_STEPS):
        if t <= T_GRASP:
            g = Pose.identity()
        elif t <= T_FUNC:
            s = _smoothstep((t - T_GRASP) / (T_FUNC - T_GRASP))
            r = exp_so3(s * w_func)
            p_func = (1.0 - s) * k0.func + s * interaction_point
            g = Pose(r, p_func - r @ k0.func)
        else:
            s = _smoothstep((t - T_FUNC) / (N_STEPS - 1 - T_FUNC))
            p_func = interaction_point + s * np.array([0.0, 0.0, 0.03])
            g = Pose(r_func, p_func - r_func @ k0.func)
        steps.append(k0.transformed(g))
    return steps


def _test_keypoints(k0: Keypoints, variation: str,
                    rng: np.random.Generator, meta: dict) -> Keypoints:
    if variation == "spatial":
        meta["scale_factor"] = 1.0
        return Keypoints(k0.func.copy(), k0.grasp.copy(), k0.center.copy())
    if variation == "instance":
        sf = float(rng.uniform(0.8, 1.25))
        meta["scale_factor"] = sf
        return Keypoints(k0.center + sf * (k0.func - k0.center),
                         k0.center + sf * (k0.grasp - k0.center),
                         k0.center.copy())
    if variation == "category":
        # same function axis, different length and a bent handle
        sf = float(rng.uniform(0.7, 1.3))
        meta["scale_factor"] = sf
        v = k0.func - k0.center
        func = k0.center + sf * v
        handle_dir = np.array([-0.55, 0.55, 0.45])
        handle_dir /= np.linalg.norm(handle_dir)
        grasp = k0.center + float(np.linalg.norm(k0.grasp - k0.center)) * handle_dir
        return Keypoints(func, grasp, k0.center.copy())
    raise ValueError(f"unknown variation {variation!r}")


def generate_scenario(kind: str, variation: str, seed: int) -> Scenario:
    """Deterministic synthetic scene for (kind, variation, seed)."""
    if kind not in _KIND_PARAMS:
        raise ValueError(f"unknown kind {kind!r}")
    if variation not in VARIATIONS:
        raise ValueError(f"unknown variation {variation!r}")
    params = _KIND_PARAMS[kind]
    rng = np.random.default_rng(
        np.random.SeedSequence([KINDS.index(kind), VARIATIONS.index(variation),
                                int(seed)]))
    meta = {"kind": kind, "variation": variation, "seed": int(seed),
            "n_steps": N_STEPS}

    he = np.array(params.target_half_extents)
    target_cloud_local = _box_surface_cloud(he)
    interaction = np.array([0.0, 0.0, he[2] + params.clearance])

    # demo tool at rest in the target frame
    center0 = (np.array([-0.16, 0.04, 0.10])
               + rng.uniform(-0.02, 0.02, 3) * np.array([1.0, 1.0, 0.5]))
    k0 = Keypoints(center0 + np.array([params.func_len, 0.0, 0.0]),
                   center0 + np.array([-params.grasp_len, 0.0, 0.03]),
                   center0)
    demo_steps_tgt = _demo_motion(k0, params, interaction)

    test_k_tgt = _test_keypoints(k0, variation, rng, meta)
    test_cloud_tgt = _tool_cloud(test_k_tgt, rng)

    # one obstacle well off the approach corridor
    obstacles = [Obstacle(np.array([0.0, -0.18, 0.03]),
                          np.array([0.02, 0.02, 0.03]))]

    # camera layout: target rotated about +z and translated
    alpha = float(rng.uniform(-0.4, 0.4))
    cam_t = np.array([0.35 + rng.uniform(0.0, 0.2),
                      rng.uniform(-0.15, 0.15),
                      rng.uniform(0.0, 0.05)])
    target_pose_cam = Pose(exp_so3(np.array([0.0, 0.0, alpha])), cam_t)

    demo = KeypointTrajectory(
        [k.transformed(target_pose_cam) for k in demo_steps_tgt], DT)
    plan = FunctionPlan(N_STEPS, T_GRASP, T_FUNC)

    grasp = GraspSpec(grasp_point=test_k_tgt.grasp.copy(),
                      approach=np.array([0.0, 0.0, -1.0]),
                      standoff=0.10, roll_samples=8)

    beta = float(rng.uniform(-math.pi, math.pi))
    target_in_base = Pose(exp_so3(np.array([0.0, 0.0, beta])),
                          np.array([0.45 + rng.uniform(-0.05, 0.05),
                                    rng.uniform(-0.2, 0.2), 0.0]))

    return Scenario(
        demo=demo,
        plan=plan,
        test_keypoints=test_k_tgt.transformed(target_pose_cam),
        test_cloud=target_pose_cam.apply(test_cloud_tgt),
        target_cloud=target_pose_cam.apply(target_cloud_local),
        up_hint=np.array([0.0, 0.0, 1.0]),
        obstacles=obstacles,
        warp=WarpSpec(),
        optim=OptimConfig(v_max=0.8, omega_max=2.0, d_min=0.01),
        grasp=grasp,
        target_in_base=target_in_base,
        seed=int(seed),
        function=kind,
        meta=meta)
