"""Scenario and trajectory file formats (JSON, schema-versioned).

All lengths are meters, all angles radians; matrices are stored as
nested row-major lists.  Loading fills documented defaults for omitted
optional sections so a minimal file stays minimal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, SchemaError, SchemaVersionMismatch
from .execution import EndEffectorTrajectory, GraspSpec
from .geometry import Pose
from .keypoints import DEFAULT_DT, FunctionPlan, Keypoints, KeypointTrajectory
from .trajopt import Obstacle, OptimConfig, WarpSpec

SCHEMA_VERSION = 1


@dataclass(eq=False)
class Scenario:
    """One retargeting problem, fully data-driven."""

    demo: KeypointTrajectory
    plan: FunctionPlan
    test_keypoints: Keypoints
    test_cloud: np.ndarray
    target_cloud: np.ndarray
    up_hint: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    obstacles: list = field(default_factory=list)
    warp: WarpSpec = field(default_factory=WarpSpec)
    optim: OptimConfig = field(default_factory=OptimConfig)
    grasp: GraspSpec | None = None
    target_in_base: Pose = field(default_factory=Pose.identity)
    seed: int = 0
    function: str = ""
    meta: dict = field(default_factory=dict)


def _vec(x, name, n=3):
    try:
        arr = np.asarray(x, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{name}: not numeric") from exc
    if arr.shape != (n,):
        raise SchemaError(f"{name}: expected {n} numbers, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise SchemaError(f"{name}: non-finite values")
    return arr


def _mat3(x, name):
    try:
        arr = np.asarray(x, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{name}: not numeric") from exc
    if arr.shape != (3, 3):
        raise SchemaError(f"{name}: expected a 3x3 matrix")
    return arr


def _cloud(x, name):
    try:
        arr = np.asarray(x, dtype=float).reshape(-1, 3)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{name}: not an Nx3 array") from exc
    return arr


def _keypoints(row, name) -> Keypoints:
    try:
        arr = np.asarray(row, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{name}: not numeric") from exc
    if arr.shape != (3, 3):
        raise SchemaError(f"{name}: expected [func, grasp, center] rows")
    try:
        return Keypoints(arr[0], arr[1], arr[2])
    except Exception as exc:
        raise SchemaError(f"{name}: {exc}") from exc


def _pose_from(obj, name) -> Pose:
    return Pose(_mat3(obj.get("r", np.eye(3).tolist()), f"{name}.r"),
                _vec(obj.get("t", [0.0, 0.0, 0.0]), f"{name}.t"))


def _pose_to(pose: Pose) -> dict:
    return {"r": pose.r.tolist(), "t": pose.t.tolist()}


def scenario_from_dict(doc: dict) -> Scenario:
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"schema_version {version!r}, expected {SCHEMA_VERSION}")
    try:
        demo_doc = doc["demo"]
        plan_doc = demo_doc["plan"]
        test_doc = doc["test"]
        target_doc = doc["target"]
    except KeyError as exc:
        raise SchemaError(f"missing required section: {exc}") from exc

    try:
        plan = FunctionPlan(int(plan_doc["n"]), int(plan_doc["t_g"]),
                            int(plan_doc["t_f"]))
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"demo.plan: {exc}") from exc
    except ValueError as exc:
        raise SchemaError(f"demo.plan: {exc}") from exc

    kp_rows = demo_doc.get("keypoints", [])
    if len(kp_rows) != plan.n_steps:
        raise SchemaError(
            f"demo.keypoints has {len(kp_rows)} steps, plan says {plan.n_steps}")
    dt = float(demo_doc.get("dt", DEFAULT_DT))
    if dt <= 0:
        raise SchemaError("demo.dt must be positive")
    demo = KeypointTrajectory(
        [_keypoints(row, f"demo.keypoints[{i}]") for i, row in enumerate(kp_rows)],
        dt)

    obstacles = []
    for i, ob in enumerate(doc.get("obstacles", [])):
        try:
            obstacles.append(Obstacle(_vec(ob["center"], f"obstacles[{i}].center"),
                                      _vec(ob["half_extents"],
                                           f"obstacles[{i}].half_extents")))
        except (KeyError, ValueError) as exc:
            raise SchemaError(f"obstacles[{i}]: {exc}") from exc

    warp_doc = doc.get("warp", {})
    try:
        warp = WarpSpec(
            symmetry_rotation=_mat3(warp_doc.get("r_sym", np.eye(3).tolist()),
                                    "warp.r_sym"),
            align_axis=warp_doc.get("align_axis", "z"),
            scale=float(warp_doc.get("scale", 1.0)),
            offset=_vec(warp_doc.get("offset", [0.0, 0.0, 0.0]), "warp.offset"))
    except ValueError as exc:
        raise SchemaError(f"warp: {exc}") from exc

    optim_doc = doc.get("optim", {})
    allowed = set(OptimConfig.__dataclass_fields__)
    unknown = set(optim_doc) - allowed
    if unknown:
        raise SchemaError(f"optim: unknown fields {sorted(unknown)}")
    optim = OptimConfig(**optim_doc)

    grasp = None
    if "grasp" in doc:
        g = doc["grasp"]
        try:
            grasp = GraspSpec(
                grasp_point=_vec(g["grasp_point"], "grasp.grasp_point"),
                approach=_vec(g["approach"], "grasp.approach"),
                standoff=float(g.get("standoff", 0.10)),
                roll_samples=int(g.get("roll_samples", 8)))
        except (KeyError, ValueError) as exc:
            raise SchemaError(f"grasp: {exc}") from exc

    return Scenario(
        demo=demo,
        plan=plan,
        test_keypoints=_keypoints(test_doc.get("keypoints"), "test.keypoints"),
        test_cloud=_cloud(test_doc.get("cloud", []), "test.cloud"),
        target_cloud=_cloud(target_doc.get("cloud", []), "target.cloud"),
        up_hint=_vec(doc.get("up_hint", [0.0, 0.0, 1.0]), "up_hint"),
        obstacles=obstacles,
        warp=warp,
        optim=optim,
        grasp=grasp,
        target_in_base=_pose_from(doc.get("target_in_base", {}), "target_in_base"),
        seed=int(doc.get("seed", 0)),
        function=str(doc.get("function", "")),
        meta=dict(doc.get("meta", {})))


def scenario_to_dict(s: Scenario) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "function": s.function,
        "demo": {
            "keypoints": [[k.func.tolist(), k.grasp.tolist(), k.center.tolist()]
                          for k in s.demo.steps],
            "plan": {"n": s.plan.n_steps, "t_g": s.plan.t_grasp,
                     "t_f": s.plan.t_func},
            "dt": s.demo.dt,
        },
        "test": {
            "keypoints": [s.test_keypoints.func.tolist(),
                          s.test_keypoints.grasp.tolist(),
                          s.test_keypoints.center.tolist()],
            "cloud": np.asarray(s.test_cloud, float).tolist(),
        },
        "target": {"cloud": np.asarray(s.target_cloud, float).tolist()},
        "up_hint": np.asarray(s.up_hint, float).tolist(),
        "obstacles": [{"center": o.center.tolist(),
                       "half_extents": o.half_extents.tolist()}
                      for o in s.obstacles],
        "warp": {"r_sym": s.warp.symmetry_rotation.tolist(),
                 "align_axis": s.warp.align_axis,
                 "scale": s.warp.scale,
                 "offset": s.warp.offset.tolist()},
        "optim": {k: getattr(s.optim, k)
                  for k in OptimConfig.__dataclass_fields__},
        "target_in_base": _pose_to(s.target_in_base),
        "seed": s.seed,
        "meta": s.meta,
    }
    if s.grasp is not None:
        doc["grasp"] = {"grasp_point": s.grasp.grasp_point.tolist(),
                        "approach": s.grasp.approach.tolist(),
                        "standoff": s.grasp.standoff,
                        "roll_samples": s.grasp.roll_samples}
    return doc


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: top level must be an object")
    return scenario_from_dict(doc)


def save_scenario(path, s: Scenario) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(s), fh, indent=1)
        fh.write("\n")


def trajectory_to_dict(traj: EndEffectorTrajectory, manifest=None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "actions": [_pose_to(a) for a in traj.actions],
        "dt": traj.dt,
        "pregrasp": _pose_to(traj.pregrasp),
        "grasp": _pose_to(traj.grasp),
        "manifest": manifest or {},
    }


def save_trajectory(path, traj: EndEffectorTrajectory, manifest=None) -> None:
    with open(path, "w") as fh:
        json.dump(trajectory_to_dict(traj, manifest), fh, indent=1)
        fh.write("\n")


def load_trajectory(path) -> EndEffectorTrajectory:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"schema_version {version!r}, expected {SCHEMA_VERSION}")
    actions = [_pose_from(a, f"actions[{i}]")
               for i, a in enumerate(doc.get("actions", []))]
    return EndEffectorTrajectory(
        actions=actions,
        dt=float(doc.get("dt", DEFAULT_DT)),
        pregrasp=_pose_from(doc.get("pregrasp", {}), "pregrasp"),
        grasp=_pose_from(doc.get("grasp", {}), "grasp"))
