"""Warping, cost relaxation and the constrained pose-trajectory solver."""

import numpy as np
import pytest

from funcframe.bench import check_solution_invariants
from funcframe.errors import (DegenerateProjection, InfeasibleBoundary,
                              LengthMismatch)
from funcframe.frames import Frame, FrameTrajectory
from funcframe.geometry import exp_so3, log_so3, rotation_about_axis
from funcframe.trajopt import (Obstacle, OptimConfig, Problem, Solution,
                               WarpSpec, check_gradient, cost_gradient,
                               evaluate_cost, point_box_distance, solve,
                               warp_reference)

I3 = np.eye(3)
Z = np.array([0.0, 0.0, 1.0])


def straight_reference(n, dt=1.0 / 30.0, step=0.01):
    frames = [Frame(np.array([step * t, 0.0, 0.1]), I3) for t in range(n)]
    return FrameTrajectory(frames, dt)


def random_reference(rng, n, dt=1.0 / 30.0):
    frames = [Frame(rng.normal(0.0, 0.2, 3), exp_so3(rng.normal(0.0, 0.8, 3)))
              for _ in range(n)]
    return FrameTrajectory(frames, dt)


# ---------------------------------------------------------------------------
# warp_reference

def test_warp_identity_is_identity():
    ref = straight_reference(5)
    out = warp_reference(ref, np.array([1.0, 0, 0]), np.array([1.0, 0, 0]),
                         WarpSpec())
    for a, b in zip(ref.frames, out.frames):
        assert np.abs(a.origin - b.origin).max() <= 1e-12
        assert np.abs(a.basis - b.basis).max() <= 1e-12


def test_warp_alignment_angle():
    ref = FrameTrajectory([Frame(np.array([1.0, 0.0, 0.2]), I3)], 0.1)
    out = warp_reference(ref, np.array([1.0, 0, 0]), np.array([0.0, 1, 0]),
                         WarpSpec(align_axis="z"))
    assert np.abs(out.frames[0].origin - [0.0, 1.0, 0.2]).max() <= 1e-9


def test_warp_symmetry_rotation():
    rz_pi = rotation_about_axis(Z, np.pi)
    ref = FrameTrajectory([Frame(np.array([0.3, -0.2, 0.5]), I3)], 0.1)
    out = warp_reference(ref, np.array([1.0, 0, 0]), np.array([1.0, 0, 0]),
                         WarpSpec(symmetry_rotation=rz_pi))
    assert np.abs(out.frames[0].origin - [-0.3, 0.2, 0.5]).max() <= 1e-9
    assert np.abs(out.frames[0].basis - rz_pi).max() <= 1e-9


def test_warp_scale_and_offset_move_origins_only():
    basis = exp_so3(np.array([0.2, -0.1, 0.4]))
    ref = FrameTrajectory([Frame(np.array([0.2, 0.1, 0.0]), basis)], 0.1)
    out = warp_reference(ref, np.array([1.0, 0, 0]), np.array([1.0, 0, 0]),
                         WarpSpec(scale=2.0, offset=np.array([0.0, 0.0, 0.5])))
    assert np.abs(out.frames[0].origin - [0.4, 0.2, 0.5]).max() <= 1e-9
    assert np.abs(out.frames[0].basis - basis).max() <= 1e-12


def test_warp_degenerate_projection():
    ref = straight_reference(3)
    with pytest.raises(DegenerateProjection):
        warp_reference(ref, np.array([0.0, 0, 1.0]), np.array([1.0, 0, 0]),
                       WarpSpec(align_axis="z"))


def test_warpspec_validation():
    with pytest.raises(ValueError):
        WarpSpec(align_axis="w")
    with pytest.raises(ValueError):
        WarpSpec(scale=0.0)
    with pytest.raises(ValueError):
        Obstacle(np.zeros(3), np.array([0.1, 0.0, 0.1]))


# ---------------------------------------------------------------------------
# cost and relaxation semantics

def offset_problem(n, t_offset, relax=0.30):
    ref = straight_reference(n)
    cfg = OptimConfig(relax_fraction=relax)
    prob = Problem(reference=ref, pi_init=ref.frames[0],
                   pi_func=ref.frames[n // 2], t_func=n // 2, config=cfg)
    frames = [Frame(f.origin.copy(), f.basis.copy()) for f in ref.frames]
    frames[t_offset] = Frame(frames[t_offset].origin + [0.1, 0.0, 0.0], I3)
    return FrameTrajectory(frames, ref.dt), prob


def test_cost_zero_on_reference():
    ref = straight_reference(10)
    prob = Problem(reference=ref, pi_init=ref.frames[0],
                   pi_func=ref.frames[5], t_func=5)
    assert evaluate_cost(ref, prob) == 0.0


def test_cost_relaxation_single_offsets():
    traj, prob = offset_problem(10, t_offset=2)
    assert evaluate_cost(traj, prob) == 0.0       # t=2 < cutoff 3
    traj, prob = offset_problem(10, t_offset=5)
    assert abs(evaluate_cost(traj, prob) - 0.01) <= 1e-15


def test_cost_cutoff_is_ceil():
    # the first ceil(0.3 * n) steps are free, the next one is not
    for n in (10, 11, 7, 20, 33):
        cut = int(np.ceil(0.3 * n - 1e-9))
        traj, prob = offset_problem(n, t_offset=cut - 1)
        assert evaluate_cost(traj, prob) == 0.0
        traj, prob = offset_problem(n, t_offset=cut)
        assert evaluate_cost(traj, prob) > 0.0


def test_cost_length_mismatch():
    ref = straight_reference(6)
    prob = Problem(reference=ref, pi_init=ref.frames[0],
                   pi_func=ref.frames[3], t_func=3)
    with pytest.raises(LengthMismatch):
        evaluate_cost(straight_reference(5), prob)


def test_rotation_cost_term():
    ref = straight_reference(4, dt=1.0)
    cfg = OptimConfig(relax_fraction=0.0, rot_weight=2.0)
    prob = Problem(reference=ref, pi_init=ref.frames[0],
                   pi_func=ref.frames[1], t_func=1, config=cfg)
    frames = [Frame(f.origin.copy(), f.basis.copy()) for f in ref.frames]
    frames[3] = Frame(frames[3].origin, exp_so3(np.array([0.0, 0.0, 0.2])))
    assert abs(evaluate_cost(FrameTrajectory(frames, 1.0), prob)
               - 2.0 * 0.2 ** 2) <= 1e-12


# ---------------------------------------------------------------------------
# gradients

def test_gradient_zero_at_reference():
    ref = straight_reference(8)
    prob = Problem(reference=ref, pi_init=ref.frames[0],
                   pi_func=ref.frames[4], t_func=4)
    assert np.abs(cost_gradient(ref, prob)).max() <= 1e-9


def test_gradient_rot_block_zero_when_unweighted():
    rng = np.random.default_rng(0)
    ref = random_reference(rng, 6)
    cfg = OptimConfig(rot_weight=0.0)
    prob = Problem(reference=ref, pi_init=ref.frames[0],
                   pi_func=ref.frames[3], t_func=3, config=cfg)
    traj = random_reference(rng, 6)
    assert np.abs(cost_gradient(traj, prob)[:, 3:]).max() == 0.0


def test_check_gradient_random_problems():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(4, 9))
        ref = random_reference(rng, n)
        tf = int(rng.integers(1, n - 1))
        cfg = OptimConfig(relax_fraction=float(rng.uniform(0.0, 0.4)),
                          rot_weight=float(rng.uniform(0.2, 3.0)))
        prob = Problem(reference=ref, pi_init=ref.frames[0],
                       pi_func=ref.frames[tf], t_func=tf, config=cfg)
        traj = random_reference(rng, n)
        assert check_gradient(prob, traj) <= 1e-4


# ---------------------------------------------------------------------------
# point_box_distance

def test_box_distance_cases():
    box = Obstacle(np.zeros(3), np.array([1.0, 1.0, 1.0]))
    assert point_box_distance(np.zeros(3), box) == -1.0
    assert point_box_distance(np.array([1.0, 0, 0]), box) == 0.0
    assert point_box_distance(np.array([3.0, 0, 0]), box) == 2.0
    skew = Obstacle(np.zeros(3), np.array([1.0, 2.0, 0.5]))
    assert point_box_distance(np.zeros(3), skew) == -0.5
    corner = point_box_distance(np.array([2.0, 3.0, 0.0]), skew)
    assert abs(corner - np.sqrt(2.0)) <= 1e-12


# ---------------------------------------------------------------------------
# solve

def test_solve_reproduces_feasible_reference():
    rng = np.random.default_rng(3)
    n = 20
    frames = []
    for t in range(n):
        ang = 0.4 * np.sin(np.pi * t / (n - 1))
        frames.append(Frame(np.array([0.01 * t, 0.0, 0.1]),
                            exp_so3(np.array([0.0, ang, 0.0]))))
    ref = FrameTrajectory(frames, 1.0 / 30.0)
    prob = Problem(reference=ref, pi_init=ref.frames[0],
                   pi_func=ref.frames[12], t_func=12,
                   config=OptimConfig(v_max=2.0, omega_max=5.0))
    sol = solve(prob)
    assert sol.converged
    assert sol.final_cost <= 1e-10
    p = np.array([f.origin for f in sol.trajectory.frames])
    pr = np.array([f.origin for f in ref.frames])
    assert np.sqrt(((p - pr) ** 2).sum(axis=1).mean()) <= 1e-6


def test_solve_closed_form_free_step():
    ref = FrameTrajectory([Frame(np.array([0.0, 0, 0]), I3),
                           Frame(np.array([0.1, 0.02, 0]), I3),
                           Frame(np.array([0.2, 0.05, 0.01]), I3)], 1.0)
    cfg = OptimConfig(relax_fraction=0.0, v_max=10.0, omega_max=10.0,
                      grad_tol=1e-12, constraint_tol=1e-9)
    prob = Problem(reference=ref,
                   pi_init=Frame(np.array([0.01, 0.0, 0.0]), I3),
                   pi_func=Frame(np.array([0.09, 0.03, 0.0]), I3),
                   t_func=1, config=cfg)
    sol = solve(prob)
    err = np.linalg.norm(sol.trajectory.frames[2].origin
                         - ref.frames[2].origin)
    assert err <= 1e-9


def test_solve_velocity_constrained_matches_projection():
    # free endpoint pulled toward an out-of-reach reference point; the
    # optimum is the radial projection onto the step-length ball
    ref = FrameTrajectory([Frame(np.zeros(3), I3),
                           Frame(np.array([0.05, 0, 0]), I3),
                           Frame(np.array([0.25, 0.12, 0.0]), I3)], 1.0)
    cfg = OptimConfig(relax_fraction=0.0, v_max=0.1, omega_max=10.0,
                      grad_tol=1e-10, constraint_tol=1e-8)
    prob = Problem(reference=ref, pi_init=ref.frames[0],
                   pi_func=ref.frames[1], t_func=1, config=cfg)
    sol = solve(prob)
    assert sol.converged
    p2 = sol.trajectory.frames[2].origin
    d = ref.frames[2].origin - ref.frames[1].origin
    analytic = ref.frames[1].origin + 0.1 * d / np.linalg.norm(d)
    assert np.linalg.norm(p2 - analytic) <= 1e-6


def test_solve_infeasible_boundary_position():
    ref = straight_reference(10, dt=1.0)
    cfg = OptimConfig(v_max=0.001)
    far = Frame(ref.frames[5].origin + [1.0, 0, 0], I3)
    prob = Problem(reference=ref, pi_init=ref.frames[0], pi_func=far,
                   t_func=5, config=cfg)
    with pytest.raises(InfeasibleBoundary):
        solve(prob)


def test_solve_infeasible_boundary_rotation():
    ref = straight_reference(10, dt=1.0)
    cfg = OptimConfig(v_max=10.0, omega_max=0.01)
    turned = Frame(ref.frames[5].origin, rotation_about_axis(Z, 3.0))
    prob = Problem(reference=ref, pi_init=ref.frames[0], pi_func=turned,
                   t_func=5, config=cfg)
    with pytest.raises(InfeasibleBoundary):
        solve(prob)


def collision_problem():
    n = 30
    frames = [Frame(np.array([-0.2 + 0.4 * t / (n - 1), 0.0, 0.05]), I3)
              for t in range(n)]
    ref = FrameTrajectory(frames, 1.0 / 30.0)
    obstacle = Obstacle(np.array([0.0, 0.0, 0.02]),
                        np.array([0.04, 0.04, 0.04]))
    proxies = np.array([[0.0, 0.0, 0.0], [0.02, 0.0, 0.0], [0.0, 0.02, 0.0]])
    return Problem(reference=ref, pi_init=ref.frames[0],
                   pi_func=ref.frames[20], t_func=20,
                   obstacles=[obstacle], tool_proxy_points=proxies,
                   config=OptimConfig(v_max=1.5, omega_max=6.0))


def test_solve_clears_obstacle():
    prob = collision_problem()
    sol = solve(prob)
    assert sol.converged
    assert check_solution_invariants(prob, sol) == []
    # the reference passes over the box closer than d_min; the solution
    # must actually deviate from it
    assert evaluate_cost(sol.trajectory, prob) > 0.0


def test_solve_post_hoc_invariants_random():
    rng = np.random.default_rng(9)
    for _ in range(5):
        n = 16
        frames = [Frame(np.array([0.01 * t, 0.005 * t, 0.1]),
                        exp_so3(np.array([0.0, 0.02 * t, 0.0])))
                  for t in range(n)]
        ref = FrameTrajectory(frames, 1.0 / 30.0)
        tf = 10
        pi_init = Frame(frames[0].origin + rng.normal(0, 0.003, 3),
                        exp_so3(rng.normal(0, 0.02, 3)) @ frames[0].basis)
        pi_func = Frame(frames[tf].origin + rng.normal(0, 0.003, 3),
                        exp_so3(rng.normal(0, 0.02, 3)) @ frames[tf].basis)
        prob = Problem(reference=ref, pi_init=pi_init, pi_func=pi_func,
                       t_func=tf, config=OptimConfig(v_max=1.0))
        sol = solve(prob)
        assert sol.converged
        assert sol.max_constraint_violation <= prob.config.constraint_tol
        assert check_solution_invariants(prob, sol) == []


def test_solve_trace_monotone_within_outer():
    prob = collision_problem()
    sol = solve(prob)
    by_outer = {}
    for outer, _, merit, _ in sol.trace:
        by_outer.setdefault(outer, []).append(merit)
    for vals in by_outer.values():
        assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))


def test_problem_validates_t_func():
    ref = straight_reference(5)
    with pytest.raises(ValueError):
        Problem(reference=ref, pi_init=ref.frames[0],
                pi_func=ref.frames[4], t_func=4)
    with pytest.raises(ValueError):
        Problem(reference=ref, pi_init=ref.frames[0],
                pi_func=ref.frames[0], t_func=0)
