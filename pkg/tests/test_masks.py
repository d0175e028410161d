import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpvo.errors import DimensionMismatch
from mpvo.geometry import CameraIntrinsics, DepthMap, Pose2D, inverse
from mpvo.masks import OverlapMask, overlap_mask, overlap_mask_reference, overlap_masks, plane_depth

K8 = CameraIntrinsics.from_hfov(8, 8, 90.0)
K64 = CameraIntrinsics(40.0, 40.0, 31.5, 23.5, 64, 48)


def random_depth(rng, k, invalid_fraction=0.2):
    d = rng.uniform(0.2, 9.0, (k.height, k.width))
    d[rng.random(d.shape) < invalid_fraction] = 0.0
    return DepthMap(d)


class TestOverlapMask:
    @pytest.mark.parametrize("k", [K8, K64])
    def test_identity_prior_is_valid_mask(self, rng, k):
        depth = random_depth(rng, k)
        np.testing.assert_array_equal(overlap_mask(depth, Pose2D(), k).bits, depth.valid_mask())

    @pytest.mark.parametrize("k", [K8, K64])
    def test_half_turn_is_empty(self, rng, k):
        assert overlap_mask(random_depth(rng, k), Pose2D(0, 0, math.pi), k).count() == 0

    def test_thirty_degree_plane_matches_loop(self):
        depth = plane_depth(K8, 2.0)
        prior = Pose2D.from_degrees(0.0, 0.0, 30.0)
        got = overlap_mask(depth, prior, K8)
        np.testing.assert_array_equal(got.bits, overlap_mask_reference(depth, prior, K8).bits)
        assert 0 < got.count() < 64

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(-180, 180),
           st.sampled_from([K8, K64]))
    def test_matches_loop(self, seed, dx, dy, deg, k):
        rng = np.random.default_rng(seed)
        depth = random_depth(rng, k)
        prior = Pose2D.from_degrees(dx, dy, deg)
        np.testing.assert_array_equal(overlap_mask(depth, prior, k).bits,
                                      overlap_mask_reference(depth, prior, k).bits)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-2.0, 2.0), st.floats(-180, 180))
    def test_subset_of_valid(self, seed, dx, deg):
        rng = np.random.default_rng(seed)
        depth = random_depth(rng, K64, 0.4)
        bits = overlap_mask(depth, Pose2D.from_degrees(dx, 0.0, deg), K64).bits
        assert not np.any(bits & ~depth.valid_mask())

    @pytest.mark.parametrize("distance", [0.5, 2.0, 8.0])
    def test_shrinks_with_rotation(self, distance):
        depth = plane_depth(K64, distance)
        counts = [overlap_mask(depth, Pose2D.from_degrees(0, 0, d), K64).count() for d in range(0, 181, 5)]
        assert all(b <= a for a, b in zip(counts, counts[1:]))
        neg = [overlap_mask(depth, Pose2D.from_degrees(0, 0, -d), K64).count() for d in range(0, 181, 5)]
        assert all(b <= a for a, b in zip(neg, neg[1:]))

    @pytest.mark.parametrize("prior", [Pose2D(0, 0, math.pi), Pose2D(0.5, 0.2, math.pi), Pose2D(-0.3, 0, 3.0)])
    def test_empty_is_symmetric(self, prior):
        a = plane_depth(K64, 3.0)
        # view b faces away from the wall view a sees; it sees a wall 2 m ahead of itself
        b = plane_depth(K64, 2.0)
        mask_a, mask_b = overlap_masks(a, b, prior, K64)
        assert mask_a.count() == 0
        assert mask_b.count() == 0
        np.testing.assert_array_equal(mask_b.bits, overlap_mask(b, inverse(prior), K64).bits)

    def test_half_open_bounds(self):
        # a pixel landing exactly on u = width is out, one at u = 0 is in
        k = CameraIntrinsics(1.0, 1.0, 1.0, 1.0, 3, 3)
        depth = DepthMap(np.ones((3, 3)))
        shift = Pose2D(0.0, -1.0, 0.0)  # points move one metre right: u grows by fx * 1 / x = 1
        bits = overlap_mask(depth, shift, k).bits
        np.testing.assert_array_equal(bits, [[True, True, False]] * 3)
        np.testing.assert_array_equal(bits, overlap_mask_reference(depth, shift, k).bits)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            overlap_mask(DepthMap(np.ones((4, 4))), Pose2D(), K8)

    def test_z_consistency(self):
        src = plane_depth(K8, 2.0)
        same = overlap_mask(src, Pose2D(), K8, target_depth=plane_depth(K8, 2.0), z_consistency=0.1)
        assert same.count() == 64
        far = overlap_mask(src, Pose2D(), K8, target_depth=plane_depth(K8, 5.0), z_consistency=0.1)
        assert far.count() == 0

    def test_to_u8(self):
        m = OverlapMask(np.array([[True, False]]))
        np.testing.assert_array_equal(m.to_u8(), [[255, 0]])
        assert m.to_u8().dtype == np.uint8
        assert (m.height, m.width) == (1, 2)
