"""Reference warping and constrained pose-trajectory optimization.

The solver tracks a (possibly warped) demonstration frame trajectory
subject to:

* hard boundary equality: frame 0 and the function-keyframe frame are
  pinned (they are removed from the variable set entirely),
* per-step translational and angular velocity bounds,
* a minimum distance between tool proxy points and obstacle boxes.

Scheme: augmented Lagrangian over the inequality constraints.  Each
outer iteration minimizes the smooth merit with L-BFGS over a tangent
parametrization anchored at the current iterate (3 translation + 3
rotation coordinates per free timestep, rotations retracted through the
exponential map); multipliers and the penalty weight update between
outer iterations.  Tracking cost is skipped for the first
ceil(relax_fraction * N) steps; those steps remain subject to all
constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import (DegenerateProjection, InfeasibleBoundary, LengthMismatch,
                     SolverDiverged)
from .frames import Frame, FrameTrajectory
from .geometry import exp_so3, log_so3

_AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


@dataclass(eq=False)
class WarpSpec:
    """How to reposition the demo reference before optimizing."""

    symmetry_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    align_axis: str = "z"
    scale: float = 1.0
    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.symmetry_rotation = np.asarray(self.symmetry_rotation, dtype=float)
        self.offset = np.asarray(self.offset, dtype=float)
        if self.align_axis not in _AXIS_INDEX:
            raise ValueError(f"align_axis must be x, y or z, got {self.align_axis!r}")
        if self.scale <= 0:
            raise ValueError("scale must be positive")


@dataclass(eq=False)
class Obstacle:
    """Axis-aligned box in the target frame."""

    center: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.half_extents = np.asarray(self.half_extents, dtype=float)
        if not (self.half_extents > 0).all():
            raise ValueError("half_extents must be positive componentwise")


@dataclass(frozen=True)
class OptimConfig:
    relax_fraction: float = 0.30
    v_max: float = 0.5          # m/s
    omega_max: float = 2.0      # rad/s
    d_min: float = 0.01         # meters
    rot_weight: float = 1.0
    constraint_tol: float = 1e-6
    grad_tol: float = 1e-6
    max_outer: int = 50
    max_inner: int = 100


@dataclass(eq=False)
class Problem:
    reference: FrameTrajectory
    pi_init: Frame
    pi_func: Frame
    t_func: int
    obstacles: list = field(default_factory=list)
    tool_proxy_points: np.ndarray | None = None  # (M, 3), tool-frame coords
    config: OptimConfig = field(default_factory=OptimConfig)

    def __post_init__(self):
        n = len(self.reference)
        if not (0 < self.t_func < n - 1):
            raise ValueError("t_func must satisfy 0 < t_func < N - 1")
        if self.tool_proxy_points is not None:
            self.tool_proxy_points = (
                np.asarray(self.tool_proxy_points, dtype=float).reshape(-1, 3))


@dataclass(eq=False)
class Solution:
    trajectory: FrameTrajectory
    final_cost: float
    max_constraint_violation: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)  # (outer, inner, merit, viol)


# ---------------------------------------------------------------------------
# batched SO(3) helpers (internal; the scalar API lives in geometry)

def _hat_batch(w: np.ndarray) -> np.ndarray:
    out = np.zeros(w.shape[:-1] + (3, 3))
    out[..., 0, 1] = -w[..., 2]
    out[..., 0, 2] = w[..., 1]
    out[..., 1, 0] = w[..., 2]
    out[..., 1, 2] = -w[..., 0]
    out[..., 2, 0] = -w[..., 1]
    out[..., 2, 1] = w[..., 0]
    return out


def _exp_batch(w: np.ndarray) -> np.ndarray:
    theta = np.linalg.norm(w, axis=-1)
    small = theta < 1e-8
    t2 = theta * theta
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(small, 1.0 - t2 / 6.0, np.sin(theta) / np.where(small, 1.0, theta))
        b = np.where(small, 0.5 - t2 / 24.0,
                     (1.0 - np.cos(theta)) / np.where(small, 1.0, t2))
    k = _hat_batch(w)
    kk = k @ k
    eye = np.broadcast_to(np.eye(3), k.shape)
    return eye + a[..., None, None] * k + b[..., None, None] * kk


def _log_batch(r: np.ndarray) -> np.ndarray:
    tr = np.trace(r, axis1=-2, axis2=-1)
    cos_t = np.clip(0.5 * (tr - 1.0), -1.0, 1.0)
    theta = np.arccos(cos_t)
    vee = 0.5 * np.stack([r[..., 2, 1] - r[..., 1, 2],
                          r[..., 0, 2] - r[..., 2, 0],
                          r[..., 1, 0] - r[..., 0, 1]], axis=-1)
    small = theta < 1e-8
    sin_t = np.sin(theta)
    with np.errstate(invalid="ignore", divide="ignore"):
        coef = np.where(small, 1.0 + theta * theta / 6.0,
                        theta / np.where(small, 1.0, sin_t))
    out = coef[..., None] * vee
    # near-pi rotations are rare in trajectories; defer to the scalar
    # branch-stable implementation
    near_pi = cos_t < -1.0 + 1e-6
    if np.any(near_pi):
        idx = np.argwhere(near_pi)
        for i in idx:
            out[tuple(i)] = log_so3(r[tuple(i)])
    return out


def _right_jacobian_batch(w: np.ndarray) -> np.ndarray:
    """Right Jacobian of the exponential map, J_r(w), batched over rows."""
    theta = np.linalg.norm(w, axis=-1)
    small = theta < 1e-6
    t2 = theta * theta
    safe2 = np.where(small, 1.0, t2)
    safe3 = np.where(small, 1.0, t2 * theta)
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(small, 0.5 - t2 / 24.0, (1.0 - np.cos(theta)) / safe2)
        b = np.where(small, 1.0 / 6.0 - t2 / 120.0,
                     (theta - np.sin(theta)) / safe3)
    k = _hat_batch(w)
    eye = np.broadcast_to(np.eye(3), k.shape)
    return eye - a[..., None, None] * k + b[..., None, None] * (k @ k)


# ---------------------------------------------------------------------------
# boxes

def _box_sdf(points: np.ndarray, center: np.ndarray, half_extents: np.ndarray):
    """Signed distance to the box surface and its gradient.

    Negative inside (= -penetration depth).  Gradient points outward.
    """
    d = points - center
    q = np.abs(d) - half_extents
    qp = np.maximum(q, 0.0)
    outside = np.linalg.norm(qp, axis=-1)
    inside_max = q.max(axis=-1)
    is_out = inside_max > 0.0
    dist = np.where(is_out, outside, inside_max)

    sgn = np.where(d >= 0.0, 1.0, -1.0)
    grad_out = qp * sgn / np.maximum(outside, 1e-300)[..., None]
    onehot = np.eye(3)[q.argmax(axis=-1)]
    grad_in = onehot * sgn
    grad = np.where(is_out[..., None], grad_out, grad_in)
    return dist, grad


def point_box_distance(p: np.ndarray, box: Obstacle) -> float:
    """Euclidean distance from p to the box surface (negative inside)."""
    dist, _ = _box_sdf(np.asarray(p, dtype=float), box.center, box.half_extents)
    return float(dist)


# ---------------------------------------------------------------------------
# warping

def _signed_plane_angle(a: np.ndarray, b: np.ndarray, axis: np.ndarray) -> float:
    ap = a - np.dot(a, axis) * axis
    bp = b - np.dot(b, axis) * axis
    if np.linalg.norm(ap) < 1e-9 or np.linalg.norm(bp) < 1e-9:
        raise DegenerateProjection(
            "function point projects to ~zero length on the alignment plane")
    return math.atan2(float(np.dot(axis, np.cross(ap, bp))),
                      float(np.dot(ap, bp)))


def warp_reference(demo: FrameTrajectory, demo_func0: np.ndarray,
                   test_func0: np.ndarray, spec: WarpSpec) -> FrameTrajectory:
    """Symmetry rotation, alignment rotation by theta, then scale + offset.

    Rotations act about the target-frame origin on both origins and
    bases; scaling and the offset move origins only.
    """
    if len(demo) == 0:
        raise LengthMismatch("demo trajectory is empty")
    axis = np.zeros(3)
    axis[_AXIS_INDEX[spec.align_axis]] = 1.0
    theta = _signed_plane_angle(np.asarray(demo_func0, float),
                                np.asarray(test_func0, float), axis)
    r = exp_so3(axis * theta) @ spec.symmetry_rotation
    frames = []
    for f in demo.frames:
        origin = spec.scale * (r @ f.origin) + spec.offset
        u = None if f.grasp_vector is None else r @ f.grasp_vector
        frames.append(Frame(origin, r @ f.basis, u))
    return FrameTrajectory(frames, demo.dt)


# ---------------------------------------------------------------------------
# cost

def _cutoff(relax_fraction: float, n: int) -> int:
    # guard against float drift in relax * n (0.3 * 10 > 3.0 in binary)
    return int(math.ceil(relax_fraction * n - 1e-9))


def _traj_arrays(traj: FrameTrajectory):
    p = np.stack([f.origin for f in traj.frames])
    r = np.stack([f.basis for f in traj.frames])
    return p, r


def evaluate_cost(traj: FrameTrajectory, problem: Problem) -> float:
    """Tracking cost against the reference, skipping the relaxed prefix."""
    if len(traj) != len(problem.reference):
        raise LengthMismatch("trajectory and reference lengths differ")
    p, r = _traj_arrays(traj)
    pref, rref = _traj_arrays(problem.reference)
    return _cost(p, r, pref, rref, problem.config)


def _cost(p, r, pref, rref, cfg: OptimConfig) -> float:
    cut = _cutoff(cfg.relax_fraction, p.shape[0])
    dp = p[cut:] - pref[cut:]
    w = _log_batch(np.einsum("tij,tkj->tik", r[cut:], rref[cut:]))
    return float((dp * dp).sum() + cfg.rot_weight * (w * w).sum())


def _cost_grad(p, r, pref, rref, cfg: OptimConfig):
    n = p.shape[0]
    cut = _cutoff(cfg.relax_fraction, n)
    gp = np.zeros((n, 3))
    gr = np.zeros((n, 3))
    gp[cut:] = 2.0 * (p[cut:] - pref[cut:])
    gr[cut:] = 2.0 * cfg.rot_weight * _log_batch(
        np.einsum("tij,tkj->tik", r[cut:], rref[cut:]))
    return gp, gr


def cost_gradient(traj: FrameTrajectory, problem: Problem) -> np.ndarray:
    """Analytic tangent-space gradient of evaluate_cost, shape (N, 6).

    Columns 0:3 are translation, 3:6 are the left-perturbation rotation
    tangent (R_t <- exp(delta) R_t).
    """
    if len(traj) != len(problem.reference):
        raise LengthMismatch("trajectory and reference lengths differ")
    p, r = _traj_arrays(traj)
    pref, rref = _traj_arrays(problem.reference)
    gp, gr = _cost_grad(p, r, pref, rref, problem.config)
    return np.hstack([gp, gr])


def check_gradient(problem: Problem, traj: FrameTrajectory,
                   step: float = 1e-6) -> float:
    """Compare cost_gradient with central finite differences.

    Returns max_i |analytic_i - fd_i| / max(1, max_i |fd_i|) over the
    free timesteps (everything except the pinned boundary frames).
    """
    p, r = _traj_arrays(traj)
    n = p.shape[0]
    free = [t for t in range(n) if t not in (0, problem.t_func)]
    analytic = cost_gradient(traj, problem)

    def cost_at(pp, rr):
        frames = [Frame(pp[t], rr[t]) for t in range(n)]
        return evaluate_cost(FrameTrajectory(frames, traj.dt), problem)

    fd = np.zeros((n, 6))
    for t in free:
        for i in range(3):
            for sign in (1.0, -1.0):
                pp = p.copy()
                pp[t, i] += sign * step
                fd[t, i] += sign * cost_at(pp, r)
            fd[t, i] /= 2.0 * step
        for i in range(3):
            delta = np.zeros(3)
            for sign in (1.0, -1.0):
                rr = r.copy()
                delta[i] = sign * step
                rr[t] = exp_so3(delta) @ r[t]
                fd[t, 3 + i] += sign * cost_at(p, rr)
            delta[i] = 0.0
            fd[t, 3 + i] /= 2.0 * step
    a = analytic[free]
    f = fd[free]
    return float(np.abs(a - f).max() / max(1.0, np.abs(f).max()))


# ---------------------------------------------------------------------------
# solver

def _blend_boundary(p, r, idx, target: Frame, window: int, pinned):
    dp = target.origin - p[idx]
    dr = log_so3(target.basis @ r[idx].T)
    for k in range(window + 1):
        a = 1.0 - k / (window + 1.0)
        for t in ({idx} if k == 0 else {idx - k, idx + k}):
            if t < 0 or t >= p.shape[0]:
                continue
            if t in pinned and t != idx:
                continue
            p[t] = p[t] + a * dp
            r[t] = exp_so3(a * dr) @ r[t]


class _Merit:
    """Augmented-Lagrangian merit and gradient for fixed multipliers."""

    def __init__(self, problem: Problem, pref, rref):
        self.cfg = problem.config
        self.pref = pref
        self.rref = rref
        self.dt = problem.reference.dt
        self.n = pref.shape[0]
        self.obstacles = list(problem.obstacles)
        self.proxies = problem.tool_proxy_points
        self.has_collision = (len(self.obstacles) > 0
                              and self.proxies is not None
                              and self.proxies.shape[0] > 0)
        m = self.proxies.shape[0] if self.has_collision else 0
        self.lam_v = np.zeros(self.n - 1)
        self.lam_w = np.zeros(self.n - 1)
        self.lam_c = np.zeros((len(self.obstacles), self.n, m))
        self.rho = 10.0

    def constraints(self, p, r):
        cfg = self.cfg
        dp = p[1:] - p[:-1]
        step = np.linalg.norm(dp, axis=1)
        gv = step - cfg.v_max * self.dt
        rel = np.einsum("tij,tkj->tik", r[1:], r[:-1])
        phi = _log_batch(rel)
        ang = np.linalg.norm(phi, axis=1)
        gw = ang - cfg.omega_max * self.dt
        gc = None
        if self.has_collision:
            world = np.einsum("tij,mj->tmi", r, self.proxies) + p[:, None, :]
            gc = np.empty((len(self.obstacles),) + world.shape[:2])
            for oi, obs in enumerate(self.obstacles):
                dist, _ = _box_sdf(world, obs.center, obs.half_extents)
                gc[oi] = cfg.d_min - dist
        return gv, gw, gc

    def max_violation(self, p, r) -> float:
        gv, gw, gc = self.constraints(p, r)
        viol = max(float(np.maximum(gv, 0.0).max(initial=0.0)),
                   float(np.maximum(gw, 0.0).max(initial=0.0)))
        if gc is not None:
            viol = max(viol, float(np.maximum(gc, 0.0).max(initial=0.0)))
        return viol

    def _penalty(self, g, lam) -> float:
        s = np.maximum(0.0, lam / self.rho + g)
        return float(0.5 * self.rho * (s * s - (lam / self.rho) ** 2).sum())

    def value(self, p, r) -> float:
        cfg = self.cfg
        val = _cost(p, r, self.pref, self.rref, cfg)
        gv, gw, gc = self.constraints(p, r)
        val += self._penalty(gv, self.lam_v)
        val += self._penalty(gw, self.lam_w)
        if gc is not None:
            val += self._penalty(gc, self.lam_c)
        return val

    def value_and_grad(self, p, r):
        cfg = self.cfg
        gp, gr = _cost_grad(p, r, self.pref, self.rref, cfg)
        val = _cost(p, r, self.pref, self.rref, cfg)

        dp = p[1:] - p[:-1]
        step = np.linalg.norm(dp, axis=1)
        gv = step - cfg.v_max * self.dt
        val += self._penalty(gv, self.lam_v)
        coef_v = np.maximum(0.0, self.lam_v + self.rho * gv)
        act = coef_v > 0.0
        if act.any():
            u = dp[act] / np.maximum(step[act], 1e-300)[:, None]
            cu = coef_v[act][:, None] * u
            idx = np.nonzero(act)[0]
            np.add.at(gp, idx + 1, cu)
            np.add.at(gp, idx, -cu)

        rel = np.einsum("tij,tkj->tik", r[1:], r[:-1])
        phi = _log_batch(rel)
        ang = np.linalg.norm(phi, axis=1)
        gw = ang - cfg.omega_max * self.dt
        val += self._penalty(gw, self.lam_w)
        coef_w = np.maximum(0.0, self.lam_w + self.rho * gw)
        act = coef_w > 0.0
        if act.any():
            u = phi[act] / np.maximum(ang[act], 1e-300)[:, None]
            cu = coef_w[act][:, None] * u
            idx = np.nonzero(act)[0]
            np.add.at(gr, idx + 1, cu)
            np.add.at(gr, idx, -cu)

        if self.has_collision:
            world_local = np.einsum("tij,mj->tmi", r, self.proxies)
            world = world_local + p[:, None, :]
            for oi, obs in enumerate(self.obstacles):
                dist, dgrad = _box_sdf(world, obs.center, obs.half_extents)
                gc = cfg.d_min - dist
                val += self._penalty(gc, self.lam_c[oi])
                coef = np.maximum(0.0, self.lam_c[oi] + self.rho * gc)
                if (coef > 0.0).any():
                    # g = d_min - dist, so d g / d y = -dgrad
                    gp += -(coef[..., None] * dgrad).sum(axis=1)
                    cr = np.cross(world_local, dgrad)
                    gr += -(coef[..., None] * cr).sum(axis=1)
        return val, gp, gr

    def update_multipliers(self, p, r):
        gv, gw, gc = self.constraints(p, r)
        self.lam_v = np.maximum(0.0, self.lam_v + self.rho * gv)
        self.lam_w = np.maximum(0.0, self.lam_w + self.rho * gw)
        if gc is not None:
            self.lam_c = np.maximum(0.0, self.lam_c + self.rho * gc)


def solve(problem: Problem, verbose: bool = False) -> Solution:
    """Minimize the tracking cost subject to boundary, velocity and
    collision constraints.  See the module docstring for the scheme."""
    cfg = problem.config
    pref, rref = _traj_arrays(problem.reference)
    n = pref.shape[0]
    dt = problem.reference.dt
    tf = problem.t_func
    pinned = {0, tf}

    # a-priori boundary feasibility along the geodesic
    pos_dist = float(np.linalg.norm(problem.pi_func.origin
                                    - problem.pi_init.origin))
    ang_dist = float(np.linalg.norm(
        log_so3(problem.pi_func.basis @ problem.pi_init.basis.T)))
    if pos_dist > tf * cfg.v_max * dt + cfg.constraint_tol:
        raise InfeasibleBoundary(
            f"boundary frames are {pos_dist:.4f} m apart but the velocity "
            f"budget over {tf} steps is {tf * cfg.v_max * dt:.4f} m")
    if ang_dist > tf * cfg.omega_max * dt + cfg.constraint_tol:
        raise InfeasibleBoundary(
            f"boundary rotation of {ang_dist:.4f} rad exceeds the angular "
            f"budget of {tf * cfg.omega_max * dt:.4f} rad")

    # warm start: the reference with pinned frames substituted and a
    # blended window around each boundary
    p = pref.copy()
    r = rref.copy()
    window = max(2, n // 10)
    _blend_boundary(p, r, 0, problem.pi_init, window, pinned)
    _blend_boundary(p, r, tf, problem.pi_func, window, pinned)
    p[0], r[0] = problem.pi_init.origin.copy(), problem.pi_init.basis.copy()
    p[tf], r[tf] = problem.pi_func.origin.copy(), problem.pi_func.basis.copy()

    fidx = np.array([t for t in range(n) if t not in pinned])
    nf = fidx.shape[0]
    merit = _Merit(problem, pref, rref)
    trace = []
    total_inner = 0
    gnorm = np.inf
    prev_viol = np.inf

    def unpack(x, p0, r0):
        pp = p0.copy()
        pp[fidx] = x[:3 * nf].reshape(nf, 3)
        delta = np.zeros((n, 3))
        delta[fidx] = x[3 * nf:].reshape(nf, 3)
        return pp, _exp_batch(delta) @ r0, delta

    for outer in range(cfg.max_outer):
        # anchor the tangent parametrization at the current iterate
        p0, r0 = p, r

        def fun(x):
            pp, rr, delta = unpack(x, p0, r0)
            val, gp, gr = merit.value_and_grad(pp, rr)
            # chain rule from the left-tangent gradient at exp(delta) R0
            # to the delta coordinates: grad = J_r(delta) @ grad_left
            gd = np.einsum("tij,tj->ti", _right_jacobian_batch(delta), gr)
            return val, np.concatenate([gp[fidx].ravel(), gd[fidx].ravel()])

        def record(xk, outer=outer):
            pp, rr, _ = unpack(xk, p0, r0)
            trace.append((outer, len(trace), merit.value(pp, rr),
                          merit.max_violation(pp, rr)))
            if verbose:
                print(f"iter outer={outer} merit={trace[-1][2]:.6e} "
                      f"viol={trace[-1][3]:.3e}")

        x0 = np.concatenate([p[fidx].ravel(), np.zeros(3 * nf)])
        record(x0)
        res = minimize(fun, x0, jac=True, method="L-BFGS-B",
                       callback=record,
                       options={"maxiter": cfg.max_inner, "maxcor": 20,
                                "gtol": cfg.grad_tol, "ftol": 1e-18})
        total_inner += int(res.nit)
        p, r, _ = unpack(res.x, p0, r0)
        if not np.isfinite(res.fun):
            raise SolverDiverged("merit became non-finite", trace=trace)

        val, gp, gr = merit.value_and_grad(p, r)
        gnorm = max(float(np.abs(gp[fidx]).max(initial=0.0)),
                    float(np.abs(gr[fidx]).max(initial=0.0)))
        viol = merit.max_violation(p, r)
        if viol <= cfg.constraint_tol and gnorm <= cfg.grad_tol:
            break
        merit.update_multipliers(p, r)
        if viol > 0.25 * prev_viol:
            merit.rho = min(merit.rho * 5.0, 1e9)
        prev_viol = viol

    viol = merit.max_violation(p, r)
    converged = bool(viol <= cfg.constraint_tol and gnorm <= cfg.grad_tol)
    frames = [Frame(p[t], r[t]) for t in range(n)]
    traj = FrameTrajectory(frames, dt)
    return Solution(trajectory=traj,
                    final_cost=evaluate_cost(traj, problem),
                    max_constraint_violation=viol,
                    iterations=total_inner,
                    converged=converged,
                    trace=trace)
