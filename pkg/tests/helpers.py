"""Shared fixture builders for the test suite."""

import math

import numpy as np

from mpvo.gcpe import CorrespondenceSet
from mpvo.geometry import Pose2D, transform_points, wrap_angle


def random_scene(rng, n, x_range=(1.0, 6.0), y_half=3.0, z_half=1.0):
    """Points spread in front of the agent, in the agent frame."""
    return np.column_stack([
        rng.uniform(*x_range, n),
        rng.uniform(-y_half, y_half, n),
        rng.uniform(-z_half, z_half, n),
    ])


def make_corrs(rng, pose: Pose2D, n=200, noise=0.0, outlier_rate=0.0, confidence=None):
    """Correspondences with ``pb = pose(pa)``, optional noise and outliers.

    Returns the set plus the boolean outlier indicator (aligned with the
    set's confidence-sorted order).
    """
    pa = random_scene(rng, n)
    pb = transform_points(pose, pa)
    if noise:
        pa = pa + rng.normal(0, noise, pa.shape)
        pb = pb + rng.normal(0, noise, pb.shape)
    outlier = rng.random(n) < outlier_rate
    pb[outlier] = random_scene(rng, int(outlier.sum()))
    conf = np.ones(n) if confidence is None else confidence(outlier, rng)
    order = np.argsort(-conf, kind="stable")
    return CorrespondenceSet(pa, pb, conf), outlier[order]


def pose_errors(a: Pose2D, b: Pose2D) -> tuple[float, float]:
    """(translation error in m, absolute rotation error in rad)."""
    return math.hypot(a.dx - b.dx, a.dy - b.dy), abs(wrap_angle(a.dtheta - b.dtheta))
