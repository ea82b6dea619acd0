"""Shared helpers for the test suite."""

import numpy as np

from funcframe.geometry import Pose, exp_so3


def random_rotation(rng):
    """Uniform-ish random rotation from a normal axis-angle draw."""
    return exp_so3(rng.normal(0.0, 1.5, 3))


def random_pose(rng, scale=0.5):
    return Pose(random_rotation(rng), rng.normal(0.0, scale, 3))
