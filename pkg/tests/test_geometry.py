"""Rotation, pose and rigid-fit unit tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funcframe.errors import DegenerateInput
from funcframe.geometry import (Pose, compose, exp_so3, fit_rigid_transform,
                                invert, is_rotation, log_so3, normalize,
                                rotation_about_axis, rotation_between,
                                transform_point)

from conftest import random_pose, random_rotation


def rz(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


# ---------------------------------------------------------------------------
# log / exp

def test_log_identity():
    assert np.allclose(log_so3(np.eye(3)), 0.0)


def test_log_quarter_turn_z():
    assert np.allclose(log_so3(rz(np.pi / 2)), [0.0, 0.0, np.pi / 2],
                       atol=1e-12)


def test_log_pi_about_x():
    r = np.diag([1.0, -1.0, -1.0])
    assert np.allclose(log_so3(r), [np.pi, 0.0, 0.0], atol=1e-12)


def test_exp_zero_is_identity():
    assert np.array_equal(exp_so3(np.zeros(3)), np.eye(3))


def test_exp_quarter_turn_z_column():
    r = exp_so3([0.0, 0.0, np.pi / 2])
    assert np.allclose(r @ [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], atol=1e-12)


def test_exp_periodicity():
    w = np.array([0.3, -0.7, 0.5])
    w2 = w * (1.0 + 2.0 * np.pi / np.linalg.norm(w))
    assert np.abs(exp_so3(w) - exp_so3(w2)).max() <= 1e-9


@settings(deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_exp_log_roundtrip(seed):
    rng = np.random.default_rng(seed)
    r = random_rotation(rng)
    assert np.linalg.norm(exp_so3(log_so3(r)) - r) <= 1e-9
    assert is_rotation(r)


@settings(deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_log_range(seed):
    rng = np.random.default_rng(seed)
    assert np.linalg.norm(log_so3(random_rotation(rng))) <= np.pi + 1e-12


# ---------------------------------------------------------------------------
# rotation_between / rotation_about_axis

def test_rotation_between_identity():
    a = np.array([1.0, 0.0, 0.0])
    assert np.allclose(rotation_between(a, a), np.eye(3))


def test_rotation_between_quarter_turn():
    r = rotation_between(np.array([1.0, 0, 0]), np.array([0.0, 1, 0]))
    assert np.allclose(r, rz(np.pi / 2), atol=1e-12)


def test_rotation_between_antiparallel_tie_break():
    a = np.array([1.0, 0.0, 0.0])
    r = rotation_between(a, -a)
    # axis rule: e = basis vector with smallest |component| in a -> e_y,
    # axis = normalize(a x e_y) = (0, 0, 1)
    assert np.allclose(r, rz(np.pi), atol=1e-12)
    assert np.allclose(r @ a, -a, atol=1e-12)


@settings(deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rotation_between_maps_a_to_b(seed):
    rng = np.random.default_rng(seed)
    a = normalize(rng.normal(size=3))
    b = normalize(rng.normal(size=3))
    r = rotation_between(a, b)
    assert np.linalg.norm(r @ a - b) <= 1e-9
    assert is_rotation(r)


def test_rotation_between_near_antiparallel():
    a = normalize(np.array([0.2, -0.9, 0.4]))
    b = normalize(-a + 1e-10 * np.array([0.0, 0.0, 1.0]))
    r = rotation_between(a, b)
    assert np.linalg.norm(r @ a - b) <= 1e-9


def test_rotation_about_axis_zero_angle():
    assert np.allclose(rotation_about_axis(np.array([0.0, 1, 0]), 0.0),
                       np.eye(3))


def test_rotation_about_axis_quarter_turn():
    r = rotation_about_axis(np.array([0.0, 0, 1]), np.pi / 2)
    assert np.allclose(r @ [1.0, 0, 0], [0.0, 1, 0], atol=1e-12)
    assert np.allclose(r @ [0.0, 0, 1], [0.0, 0, 1], atol=1e-12)


# ---------------------------------------------------------------------------
# Pose algebra

def test_compose_with_identity():
    rng = np.random.default_rng(1)
    b = random_pose(rng)
    assert compose(Pose.identity(), b).is_close(b)


def test_transform_point_worked():
    pose = Pose(rz(np.pi / 2), np.array([1.0, 0.0, 0.0]))
    assert np.allclose(transform_point(pose, np.array([1.0, 0, 0])),
                       [1.0, 1.0, 0.0], atol=1e-12)


def test_invert_involution():
    rng = np.random.default_rng(2)
    for _ in range(20):
        a = random_pose(rng)
        assert invert(invert(a)).is_close(a, tol=1e-12)
        assert compose(a, invert(a)).is_close(Pose.identity(), tol=1e-12)


def test_pose_apply_batch():
    pose = Pose(rz(np.pi / 2), np.array([0.0, 0.0, 1.0]))
    pts = np.array([[1.0, 0, 0], [0.0, 1, 0]])
    out = pose.apply(pts)
    assert np.allclose(out, [[0, 1, 1], [-1, 0, 1]], atol=1e-12)


# ---------------------------------------------------------------------------
# rigid fit

def _tetra():
    return np.array([[0.0, 0, 0], [1.0, 0, 0], [0.0, 1, 0], [0.0, 0, 1]])


def test_fit_identity():
    pose = fit_rigid_transform(_tetra(), _tetra())
    assert pose.is_close(Pose.identity(), tol=1e-12)


def test_fit_recovers_known_transform():
    src = _tetra()
    true = Pose(rz(np.pi / 2), np.array([1.0, 2.0, 3.0]))
    pose = fit_rigid_transform(src, true.apply(src))
    assert np.abs(pose.r - true.r).max() <= 1e-9
    assert np.abs(pose.t - true.t).max() <= 1e-9


def test_fit_rejects_reflection():
    src = _tetra()
    dst = src * np.array([-1.0, 1.0, 1.0])  # mirrored
    pose = fit_rigid_transform(src, dst)
    assert abs(np.linalg.det(pose.r) - 1.0) <= 1e-9


def test_fit_degenerate_inputs():
    line = np.array([[0.0, 0, 0], [1.0, 0, 0], [2.0, 0, 0], [3.0, 0, 0]])
    with pytest.raises(DegenerateInput):
        fit_rigid_transform(line, line)
    with pytest.raises(DegenerateInput):
        fit_rigid_transform(_tetra()[:2], _tetra()[:2])


def test_fit_noise_translation_error():
    rng = np.random.default_rng(7)
    src = rng.normal(0.0, 0.3, (100, 3))
    true = random_pose(rng)
    dst = true.apply(src) + rng.normal(0.0, 1e-3, (100, 3))
    pose = fit_rigid_transform(src, dst)
    assert np.linalg.norm(pose.t - true.t) <= 5e-3
