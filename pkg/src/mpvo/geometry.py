"""Planar rigid-motion algebra, point transforms and pinhole backprojection.

Frame convention used throughout the package: right-handed, x forward,
y left, z up.  An SE(2) pose acts on (x, y) and passes z through.  The
camera optical axis is the agent +x axis; image u grows to the right
(agent -y) and v grows downwards (agent -z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidDepth, OutOfBounds

TWO_PI = 2.0 * math.pi


def wrap_angle(angle):
    """Wrap an angle (scalar or array) into the half-open interval (-pi, pi]."""
    if isinstance(angle, np.ndarray):
        return math.pi - np.mod(math.pi - angle, TWO_PI)
    wrapped = math.pi - math.fmod(math.pi - angle, TWO_PI)
    if wrapped > math.pi:
        wrapped -= TWO_PI
    elif wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


@dataclass(frozen=True)
class Pose2D:
    """SE(2) pose: translation (dx, dy) in meters and yaw dtheta in radians."""

    dx: float = 0.0
    dy: float = 0.0
    dtheta: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "dx", float(self.dx))
        object.__setattr__(self, "dy", float(self.dy))
        object.__setattr__(self, "dtheta", wrap_angle(float(self.dtheta)))

    @classmethod
    def identity(cls) -> Pose2D:
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, arr) -> Pose2D:
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    @classmethod
    def from_degrees(cls, dx: float, dy: float, dtheta_deg: float) -> Pose2D:
        return cls(dx, dy, math.radians(dtheta_deg))

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dtheta])

    def as_matrix(self) -> np.ndarray:
        """Homogeneous 3x3 matrix of the planar transform."""
        c, s = math.cos(self.dtheta), math.sin(self.dtheta)
        return np.array([[c, -s, self.dx], [s, c, self.dy], [0.0, 0.0, 1.0]])

    @property
    def translation_norm(self) -> float:
        return math.hypot(self.dx, self.dy)

    def compose(self, other: Pose2D) -> Pose2D:
        return compose(self, other)

    def inverse(self) -> Pose2D:
        return inverse(self)

    def __matmul__(self, other: Pose2D) -> Pose2D:
        return compose(self, other)


class Point3D(NamedTuple):
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @classmethod
    def from_hfov(cls, width: int, height: int, hfov_deg: float) -> CameraIntrinsics:
        """Square-pixel intrinsics with the principal point at the image centre."""
        f = (width / 2.0) / math.tan(math.radians(hfov_deg) / 2.0)
        return cls(f, f, width / 2.0, height / 2.0, width, height)

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class DepthMap:
    """Row-major metric depth image; 0 marks invalid pixels."""

    values: np.ndarray
    min_depth: float = 0.1
    max_depth: float = 10.0

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("depth values must be a 2D array")
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def valid_range(self) -> tuple[float, float]:
        return (self.min_depth, self.max_depth)

    def is_valid(self, depth: float) -> bool:
        return self.min_depth <= depth <= self.max_depth

    def valid_mask(self) -> np.ndarray:
        v = self.values
        return (v >= self.min_depth) & (v <= self.max_depth)


def compose(a: Pose2D, b: Pose2D) -> Pose2D:
    """Pose of ``b`` expressed through ``a`` (a followed by b)."""
    c, s = math.cos(a.dtheta), math.sin(a.dtheta)
    return Pose2D(
        a.dx + c * b.dx - s * b.dy,
        a.dy + s * b.dx + c * b.dy,
        a.dtheta + b.dtheta,
    )


def inverse(p: Pose2D) -> Pose2D:
    c, s = math.cos(p.dtheta), math.sin(p.dtheta)
    return Pose2D(-(c * p.dx + s * p.dy), s * p.dx - c * p.dy, -p.dtheta)


def transform_point(p: Pose2D, q) -> Point3D:
    c, s = math.cos(p.dtheta), math.sin(p.dtheta)
    x, y, z = float(q[0]), float(q[1]), float(q[2])
    return Point3D(c * x - s * y + p.dx, s * x + c * y + p.dy, z)


def transform_points(p: Pose2D, pts: np.ndarray) -> np.ndarray:
    """Apply ``p`` to an (N, 3) array of points."""
    pts = np.asarray(pts, dtype=np.float64)
    c, s = math.cos(p.dtheta), math.sin(p.dtheta)
    out = np.empty_like(pts)
    out[:, 0] = c * pts[:, 0] - s * pts[:, 1] + p.dx
    out[:, 1] = s * pts[:, 0] + c * pts[:, 1] + p.dy
    out[:, 2] = pts[:, 2]
    return out


def backproject(pixel, depth: float, k: CameraIntrinsics,
                valid_range: tuple[float, float] = (0.1, 10.0)) -> Point3D:
    """Lift pixel (u, v) with z-depth ``depth`` to an agent-frame point."""
    u, v = float(pixel[0]), float(pixel[1])
    if not (0 <= u < k.width and 0 <= v < k.height):
        raise OutOfBounds(f"pixel ({u}, {v}) outside {k.width}x{k.height} image")
    if not (valid_range[0] <= depth <= valid_range[1]):
        raise InvalidDepth(f"depth {depth} outside {valid_range}")
    return Point3D(depth, -(u - k.cx) * depth / k.fx, -(v - k.cy) * depth / k.fy)


def backproject_array(u: np.ndarray, v: np.ndarray, depth: np.ndarray,
                      k: CameraIntrinsics) -> np.ndarray:
    """Vectorised backprojection without validity checks; returns (N, 3)."""
    depth = np.asarray(depth, dtype=np.float64)
    return np.stack(
        [depth, -(np.asarray(u) - k.cx) * depth / k.fx, -(np.asarray(v) - k.cy) * depth / k.fy],
        axis=-1,
    )


def project(q, k: CameraIntrinsics) -> tuple[float, float]:
    """Pinhole projection of an agent-frame point; inverse of :func:`backproject`."""
    x, y, z = float(q[0]), float(q[1]), float(q[2])
    return (k.cx - k.fx * y / x, k.cy - k.fy * z / x)


def symmetric_epe(t: Pose2D, pa, pb) -> float:
    """Forward plus backward squared endpoint error of one correspondence."""
    fwd = np.subtract(transform_point(t, pa), pb)
    bwd = np.subtract(transform_point(inverse(t), pb), pa)
    return float(fwd @ fwd + bwd @ bwd)


def symmetric_epe_batch(poses: np.ndarray, pa: np.ndarray, pb: np.ndarray) -> np.ndarray:
    """Symmetric EPE for every (pose, correspondence) pair.

    ``poses`` is (K, 3) rows of (dx, dy, dtheta); ``pa``/``pb`` are (N, 3).
    Returns a (K, N) array.
    """
    poses = np.atleast_2d(np.asarray(poses, dtype=np.float64))
    tx, ty, th = poses[:, 0:1], poses[:, 1:2], poses[:, 2:3]
    c, s = np.cos(th), np.sin(th)
    ax, ay = pa[None, :, 0], pa[None, :, 1]
    bx, by = pb[None, :, 0], pb[None, :, 1]
    dz2 = (pa[:, 2] - pb[:, 2])[None, :] ** 2

    fx = c * ax - s * ay + tx - bx
    fy = s * ax + c * ay + ty - by
    # inverse pose applied to pb: R^T (pb - t)
    rx, ry = bx - tx, by - ty
    gx = c * rx + s * ry - ax
    gy = -s * rx + c * ry - ay
    return fx * fx + fy * fy + gx * gx + gy * gy + 2.0 * dz2
