"""Competing estimators: ratio-test matching and weighted Procrustes variants."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, EmptySet
from .gcpe import CorrespondenceSet
from .geometry import CameraIntrinsics, Pose2D, backproject_array, symmetric_epe_batch


class EstimatorKind(str, enum.Enum):
    GCPE = "gcpe"
    WEIGHTED_PROCRUSTES = "wp"
    RANDOMIZED_WEIGHTED_PROCRUSTES = "rwp"
    # reference estimators used by the simulator and benchmark
    ACTION_PRIOR = "action-prior"
    GT_ORACLE = "gt-oracle"

    @classmethod
    def parse(cls, text: str) -> EstimatorKind:
        key = text.strip().lower().replace("_", "-")
        aliases = {
            "weighted-procrustes": cls.WEIGHTED_PROCRUSTES,
            "randomized-weighted-procrustes": cls.RANDOMIZED_WEIGHTED_PROCRUSTES,
            "dead-reckoning": cls.ACTION_PRIOR,
            "oracle": cls.GT_ORACLE,
        }
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class DescriptorSet:
    """Unit-norm descriptors with the pixel and depth of each keypoint."""

    descriptors: np.ndarray
    keypoints: np.ndarray
    depths: np.ndarray

    def __post_init__(self) -> None:
        d = np.atleast_2d(np.asarray(self.descriptors, dtype=np.float64))
        kp = np.asarray(self.keypoints, dtype=np.float64).reshape(-1, 2)
        z = np.asarray(self.depths, dtype=np.float64).reshape(-1)
        if not (len(d) == len(kp) == len(z)):
            raise ValueError("descriptors, keypoints and depths must have equal length")
        if len(d) and np.any(np.abs(np.linalg.norm(d, axis=1) - 1.0) > 1e-6):
            raise ValueError("descriptors must be unit-norm")
        object.__setattr__(self, "descriptors", d)
        object.__setattr__(self, "keypoints", kp)
        object.__setattr__(self, "depths", z)

    def __len__(self) -> int:
        return len(self.keypoints)


def nnsr_match(a: DescriptorSet, b: DescriptorSet, k: CameraIntrinsics,
               ratio_threshold: float = 0.8, m: int | None = None) -> CorrespondenceSet:
    """Lowe ratio-test matching from ``a`` to ``b``, lifted to 3D.

    A descriptor in ``a`` is matched to its nearest neighbour in ``b`` iff
    ``d1 / d2 < ratio_threshold``; the match confidence is ``1 - d1 / d2``.
    When ``b`` holds a single descriptor there is no second neighbour and
    nothing is accepted.
    """
    if len(a) == 0 or len(b) == 0:
        raise EmptySet("descriptor sets must be non-empty")
    if not 0 < ratio_threshold < 1:
        raise ValueError("ratio_threshold must lie in (0, 1)")
    if len(b) < 2:
        return CorrespondenceSet.empty(m)

    # squared L2 distances of unit vectors, clipped against round-off
    d2 = np.maximum(2.0 - 2.0 * a.descriptors @ b.descriptors.T, 0.0)
    nn = np.argsort(d2, axis=1, kind="stable")[:, :2]
    rows = np.arange(len(a))
    d1 = np.sqrt(d2[rows, nn[:, 0]])
    d2nd = np.sqrt(d2[rows, nn[:, 1]])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(d2nd > 0, d1 / d2nd, 1.0)
    keep = ratio < ratio_threshold
    ia, ib = rows[keep], nn[keep, 0]
    pa = backproject_array(a.keypoints[ia, 0], a.keypoints[ia, 1], a.depths[ia], k)
    pb = backproject_array(b.keypoints[ib, 0], b.keypoints[ib, 1], b.depths[ib], k)
    return CorrespondenceSet(pa, pb, 1.0 - ratio[keep], m=m)


def _procrustes_batch(pa: np.ndarray, pb: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Weighted planar Procrustes for a batch of weight vectors.

    ``pa``/``pb`` are (N, 3); ``w`` is (B, N).  Returns (B, 3) poses and a
    (B,) boolean flag marking degenerate problems.
    """
    w = np.atleast_2d(w)
    wsum = w.sum(axis=1)
    safe = np.where(wsum > 0, wsum, 1.0)
    ca = (w @ pa[:, :2]) / safe[:, None]
    cb = (w @ pb[:, :2]) / safe[:, None]
    ax = pa[None, :, 0] - ca[:, 0:1]
    ay = pa[None, :, 1] - ca[:, 1:2]
    bx = pb[None, :, 0] - cb[:, 0:1]
    by = pb[None, :, 1] - cb[:, 1:2]
    s_cos = np.sum(w * (ax * bx + ay * by), axis=1)
    s_sin = np.sum(w * (ax * by - ay * bx), axis=1)
    spread = np.sum(w * (ax * ax + ay * ay), axis=1)
    theta = np.arctan2(s_sin, s_cos)
    c, s = np.cos(theta), np.sin(theta)
    tx = cb[:, 0] - (c * ca[:, 0] - s * ca[:, 1])
    ty = cb[:, 1] - (s * ca[:, 0] + c * ca[:, 1])
    scale = np.maximum(np.sum(w * (pa[None, :, 0] ** 2 + pa[None, :, 1] ** 2), axis=1), 1e-300)
    degenerate = (wsum <= 0) | (spread <= 1e-12 * scale) | (np.hypot(s_cos, s_sin) == 0)
    return np.stack([tx, ty, theta], axis=1), degenerate


def weighted_procrustes(corrs: CorrespondenceSet, weights=None) -> Pose2D:
    """Closed-form SE(2) minimiser of sum w_i |T(pa_i) - pb_i|^2 in the ground plane.

    Weights default to the correspondence confidences; z is ignored.
    """
    if len(corrs) < 2:
        raise DegenerateInput("weighted Procrustes needs at least two correspondences")
    w = corrs.confidence if weights is None else np.asarray(weights, dtype=np.float64)
    poses, degenerate = _procrustes_batch(corrs.pa, corrs.pb, w[None, :])
    if degenerate[0]:
        raise DegenerateInput("correspondences are rank deficient after weighting")
    return Pose2D.from_array(poses[0])


def _weighted_subsets(rng: np.random.Generator, w: np.ndarray, n_rounds: int, size: int) -> np.ndarray:
    # Gumbel top-k: weighted sampling without replacement, one row per round
    with np.errstate(divide="ignore"):
        logw = np.log(w)
    keys = logw[None, :] + rng.gumbel(size=(n_rounds, len(w)))
    return np.argpartition(-keys, size - 1, axis=1)[:, :size]


def rwp_score(poses: np.ndarray, corrs: CorrespondenceSet, inlier_scale: float) -> np.ndarray:
    """Confidence-weighted robust inverse symmetric EPE of each hypothesis."""
    epe = symmetric_epe_batch(poses, corrs.pa, corrs.pb)
    return np.sum(corrs.confidence[None, :] / (epe + inlier_scale ** 2), axis=1)


def randomized_weighted_procrustes(corrs: CorrespondenceSet, n_rounds: int = 128,
                                   subset_fraction: float = 0.1, rng_seed: int = 0,
                                   inlier_scale: float = 0.05) -> Pose2D:
    """RANSAC-style weighted Procrustes.

    Round 0 is the full-set hypothesis; the remaining rounds solve on
    confidence-weighted random subsets.  The best hypothesis under
    :func:`rwp_score` is refined once with weights
    ``confidence / (epe + inlier_scale**2)``.  Ties go to the lowest round.
    """
    n = len(corrs)
    if n < 3:
        raise DegenerateInput("randomized weighted Procrustes needs at least three correspondences")
    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    rng = np.random.default_rng(rng_seed)
    conf = corrs.confidence
    size = min(n, max(2, int(round(subset_fraction * n))))

    weights = np.zeros((n_rounds, n))
    weights[0] = conf
    if n_rounds > 1:
        sample_w = conf if np.any(conf > 0) else np.ones(n)
        idx = _weighted_subsets(rng, sample_w, n_rounds - 1, size)
        rows = np.repeat(np.arange(1, n_rounds), size)
        weights[rows, idx.ravel()] = conf[idx.ravel()]
    poses, degenerate = _procrustes_batch(corrs.pa, corrs.pb, weights)
    scores = rwp_score(poses, corrs, inlier_scale)
    scores[degenerate] = -np.inf
    if not np.any(np.isfinite(scores)):
        raise DegenerateInput("every hypothesis was degenerate")
    best = int(np.argmax(scores))

    epe = symmetric_epe_batch(poses[best], corrs.pa, corrs.pb)[0]
    refine_w = conf / (epe + inlier_scale ** 2)
    refined, bad = _procrustes_batch(corrs.pa, corrs.pb, refine_w[None, :])
    if bad[0]:
        return Pose2D.from_array(poses[best])
    return Pose2D.from_array(refined[0])
