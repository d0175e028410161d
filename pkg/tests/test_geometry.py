import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpvo.errors import InvalidDepth, OutOfBounds
from mpvo.geometry import (CameraIntrinsics, DepthMap, Pose2D, backproject, compose, inverse, project,
                           symmetric_epe, symmetric_epe_batch, transform_point, transform_points, wrap_angle)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
angles = st.floats(-20, 20, allow_nan=False, allow_infinity=False)
poses = st.builds(Pose2D, finite, finite, angles)
points = st.tuples(finite, finite, finite)


def assert_pose_close(a, b, tol=1e-12):
    assert abs(a.dx - b.dx) <= tol
    assert abs(a.dy - b.dy) <= tol
    assert abs(wrap_angle(a.dtheta - b.dtheta)) <= tol


class TestWrapAngle:
    @pytest.mark.parametrize("angle, expected", [
        (0.0, 0.0), (math.pi, math.pi), (-math.pi, math.pi), (3 * math.pi, math.pi),
        (2 * math.pi, 0.0), (math.pi / 2 + 4 * math.pi, math.pi / 2), (-3 * math.pi / 2, math.pi / 2),
    ])
    def test_known_values(self, angle, expected):
        assert wrap_angle(angle) == pytest.approx(expected, abs=1e-12)

    @given(angles)
    def test_range(self, a):
        w = wrap_angle(a)
        assert -math.pi < w <= math.pi

    def test_array_matches_scalar(self):
        a = np.linspace(-10, 10, 101)
        np.testing.assert_allclose(wrap_angle(a), [wrap_angle(float(x)) for x in a], atol=1e-12)


class TestCompose:
    def test_identity_left(self):
        assert compose(Pose2D(), Pose2D(0.25, 0, 0)) == Pose2D(0.25, 0, 0)

    def test_quarter_turn(self):
        assert_pose_close(compose(Pose2D(0, 0, math.pi / 2), Pose2D(1, 0, 0)), Pose2D(0, 1, math.pi / 2))

    def test_matmul_operator(self):
        a, b = Pose2D(1, 2, 0.3), Pose2D(-1, 0.5, 2.0)
        assert a @ b == compose(a, b)

    def test_stored_angle_is_wrapped(self):
        p = compose(Pose2D(0, 0, 3.0), Pose2D(0, 0, 3.0))
        assert -math.pi < p.dtheta <= math.pi
        assert p.dtheta == pytest.approx(6.0 - 2 * math.pi)

    @given(poses)
    def test_inverse_both_sides(self, p):
        assert_pose_close(compose(p, inverse(p)), Pose2D(), 1e-12 * max(1.0, abs(p.dx) + abs(p.dy)))
        assert_pose_close(compose(inverse(p), p), Pose2D(), 1e-12 * max(1.0, abs(p.dx) + abs(p.dy)))

    @given(poses, poses, poses)
    def test_associative(self, a, b, c):
        scale = 1.0 + sum(abs(v) for p in (a, b, c) for v in (p.dx, p.dy))
        assert_pose_close(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-12 * scale)

    @given(poses)
    def test_identity_element(self, p):
        assert_pose_close(compose(p, Pose2D()), p)
        assert_pose_close(compose(Pose2D(), p), p)

    def test_matrix_form(self):
        a, b = Pose2D(1.0, -2.0, 0.7), Pose2D(0.3, 0.4, -2.5)
        m = a.as_matrix() @ b.as_matrix()
        c = compose(a, b)
        np.testing.assert_allclose(c.as_matrix(), m, atol=1e-12)


class TestInverse:
    def test_examples(self):
        assert inverse(Pose2D()) == Pose2D()
        assert_pose_close(inverse(Pose2D(1, 0, 0)), Pose2D(-1, 0, 0))
        assert_pose_close(inverse(Pose2D(0, 0, 0.4)), Pose2D(0, 0, -0.4))

    def test_half_turn_stays_in_range(self):
        assert inverse(Pose2D(0, 0, math.pi)).dtheta == pytest.approx(math.pi)


class TestTransformPoint:
    def test_examples(self):
        assert transform_point(Pose2D(), (1, 2, 3)) == (1, 2, 3)
        assert transform_point(Pose2D(1, 0, 0), (0, 0, 0.5)) == (1, 0, 0.5)
        q = transform_point(Pose2D(0, 0, math.pi / 2), (1, 0, 0))
        np.testing.assert_allclose(q, (0, 1, 0), atol=1e-15)

    @given(poses, poses, points)
    def test_composition_law(self, a, b, q):
        lhs = transform_point(compose(a, b), q)
        rhs = transform_point(a, transform_point(b, q))
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    @settings(max_examples=30)
    @given(poses, st.lists(points, min_size=1, max_size=20))
    def test_vectorised_matches_scalar(self, p, pts):
        arr = np.array(pts, dtype=float)
        np.testing.assert_allclose(transform_points(p, arr), [transform_point(p, q) for q in pts],
                                   rtol=0, atol=1e-12)


class TestBackproject:
    k = CameraIntrinsics(100.0, 90.0, 32.0, 24.0, 64, 48)

    def test_principal_point_is_on_axis(self):
        assert backproject((32.0, 24.0), 3.0, self.k) == (3.0, 0.0, 0.0)

    def test_unit_lateral_offset(self):
        # ten pixels right of centre at 10 m depth, fx = 100: one metre to the right (negative y)
        p = backproject((42.0, 24.0), 10.0, self.k)
        assert p == pytest.approx((10.0, -1.0, 0.0))
        wide = CameraIntrinsics(10.0, 10.0, 5.0, 5.0, 20, 10)
        assert backproject((15.0, 5.0), 1.0, wide) == pytest.approx((1.0, -1.0, 0.0))

    def test_errors(self):
        with pytest.raises(InvalidDepth):
            backproject((1, 1), 0.0, self.k)
        with pytest.raises(InvalidDepth):
            backproject((1, 1), 10.5, self.k)
        with pytest.raises(OutOfBounds):
            backproject((64, 1), 1.0, self.k)
        with pytest.raises(OutOfBounds):
            backproject((-0.5, 1), 1.0, self.k)

    def test_round_trip_every_pixel(self, rng):
        k = CameraIntrinsics(rng.uniform(50, 500), rng.uniform(50, 500), rng.uniform(0, 64), rng.uniform(0, 48), 64, 48)
        depth = rng.uniform(0.1, 10.0, (48, 64))
        for v in range(48):
            for u in range(64):
                pu, pv = project(backproject((u, v), depth[v, u], k), k)
                assert abs(pu - u) < 1e-9 and abs(pv - v) < 1e-9

    def test_intrinsics_validation(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(0.0, 1.0, 1.0, 1.0, 4, 4)
        with pytest.raises(ValueError):
            CameraIntrinsics(1.0, 1.0, 4.0, 1.0, 4, 4)

    def test_from_hfov(self):
        k = CameraIntrinsics.from_hfov(640, 480, 90.0)
        assert k.fx == pytest.approx(320.0)
        assert (k.cx, k.cy) == (320.0, 240.0)

    def test_depth_map_validity(self):
        d = DepthMap(np.array([[0.0, 0.1, 5.0], [10.0, 10.01, 0.05]]))
        np.testing.assert_array_equal(d.valid_mask(), [[False, True, True], [True, False, False]])
        assert d.valid_range == (0.1, 10.0)


class TestSymmetricEpe:
    def test_examples(self):
        assert symmetric_epe(Pose2D(), (0, 0, 0), (1, 0, 0)) == 2.0
        t = Pose2D(0.3, -0.2, 0.5)
        pa = (1.0, 2.0, 0.5)
        assert symmetric_epe(t, pa, transform_point(t, pa)) == pytest.approx(0.0, abs=1e-28)

    def test_z_offset_counts_twice(self):
        assert symmetric_epe(Pose2D(), (1, 1, 0), (1, 1, 0.5)) == pytest.approx(0.5)

    @given(poses, points, points)
    def test_swap_symmetry(self, t, pa, pb):
        a = symmetric_epe(t, pa, pb)
        b = symmetric_epe(inverse(t), pb, pa)
        assert a == pytest.approx(b, rel=1e-9, abs=1e-9)

    def test_batch_matches_scalar(self, rng):
        pa = rng.normal(size=(15, 3))
        pb = rng.normal(size=(15, 3))
        cand = rng.normal(size=(7, 3))
        batch = symmetric_epe_batch(cand, pa, pb)
        for j, c in enumerate(cand):
            for i in range(15):
                assert batch[j, i] == pytest.approx(symmetric_epe(Pose2D.from_array(c), pa[i], pb[i]), rel=1e-12)
