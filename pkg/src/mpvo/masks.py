"""Coarse overlap masks from a source depth map and a prior relative pose."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .geometry import CameraIntrinsics, DepthMap, Pose2D, backproject_array, inverse, transform_points

# Projections within this many pixels of an image edge are snapped onto it,
# so that round-off in the backproject/project round trip cannot flip a bit.
BOUND_EPS = 1e-9


@dataclass(frozen=True)
class OverlapMask:
    bits: np.ndarray

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def count(self) -> int:
        return int(self.bits.sum())

    def to_u8(self) -> np.ndarray:
        return np.where(self.bits, 255, 0).astype(np.uint8)


def overlap_mask(src_depth: DepthMap, prior: Pose2D, k: CameraIntrinsics,
                 target_depth: DepthMap | None = None,
                 z_consistency: float | None = None) -> OverlapMask:
    """Pixels of the source view expected to be visible from the target view.

    ``prior`` maps source-view points into the target view.  A pixel is set
    iff its depth is valid, the warped point lies further than
    ``src_depth.min_depth`` in front of the target camera, and it projects
    inside the half-open target image ``[0, width) x [0, height)``.

    Passing ``target_depth`` together with ``z_consistency`` additionally
    drops pixels whose warped depth disagrees with the target depth by more
    than ``z_consistency`` meters.  Both default to off.
    """
    if (src_depth.width, src_depth.height) != (k.width, k.height):
        raise DimensionMismatch(
            f"depth map {src_depth.width}x{src_depth.height} does not match "
            f"intrinsics {k.width}x{k.height}"
        )
    valid = src_depth.valid_mask()
    v, u = np.nonzero(valid)
    pts = backproject_array(u, v, src_depth.values[v, u], k)
    warped = transform_points(prior, pts)

    x = warped[:, 0]
    in_front = x > src_depth.min_depth
    safe_x = np.where(in_front, x, 1.0)
    tu = k.cx - k.fx * warped[:, 1] / safe_x
    tv = k.cy - k.fy * warped[:, 2] / safe_x
    inside = (in_front & (tu >= -BOUND_EPS) & (tu < k.width - BOUND_EPS)
              & (tv >= -BOUND_EPS) & (tv < k.height - BOUND_EPS))

    if target_depth is not None and z_consistency is not None:
        iu = np.floor(np.where(inside, tu, 0)).astype(int)
        iv = np.floor(np.where(inside, tv, 0)).astype(int)
        tz = target_depth.values[iv, iu]
        inside &= np.abs(tz - x) <= z_consistency

    bits = np.zeros(valid.shape, dtype=bool)
    bits[v[inside], u[inside]] = True
    return OverlapMask(bits)


def overlap_masks(depth_a: DepthMap, depth_b: DepthMap, prior: Pose2D,
                  k: CameraIntrinsics) -> tuple[OverlapMask, OverlapMask]:
    """Masks for both views: view a warped by ``prior``, view b by its inverse."""
    return overlap_mask(depth_a, prior, k), overlap_mask(depth_b, inverse(prior), k)


def overlap_mask_reference(src_depth: DepthMap, prior: Pose2D, k: CameraIntrinsics) -> OverlapMask:
    """Per-pixel scalar loop computing the same mask; slow, used as an oracle."""
    h, w = src_depth.height, src_depth.width
    c, s = math.cos(prior.dtheta), math.sin(prior.dtheta)
    bits = np.zeros((h, w), dtype=bool)
    for row in range(h):
        for col in range(w):
            d = float(src_depth.values[row, col])
            if not (src_depth.min_depth <= d <= src_depth.max_depth):
                continue
            px, py, pz = d, -(col - k.cx) * d / k.fx, -(row - k.cy) * d / k.fy
            qx = c * px - s * py + prior.dx
            qy = s * px + c * py + prior.dy
            if qx <= src_depth.min_depth:
                continue
            tu = k.cx - k.fx * qy / qx
            tv = k.cy - k.fy * pz / qx
            bits[row, col] = (-BOUND_EPS <= tu < w - BOUND_EPS) and (-BOUND_EPS <= tv < h - BOUND_EPS)
    return OverlapMask(bits)


def plane_depth(k: CameraIntrinsics, distance: float, min_depth: float = 0.1,
                max_depth: float = 10.0) -> DepthMap:
    """Fronto-parallel wall at ``distance`` meters filling the whole image."""
    return DepthMap(np.full((k.height, k.width), float(distance)), min_depth, max_depth)
