"""Motion-prior SE(2) relative pose estimation, baselines, metrics and a navigation simulator."""

from .baselines import EstimatorKind, nnsr_match, randomized_weighted_procrustes, weighted_procrustes
from .gcpe import (Correspondence3D, CorrespondenceSet, GcpeConfig, GcpeResult, PriorDistribution,
                   estimate_pose, estimate_relative_pose)
from .geometry import CameraIntrinsics, DepthMap, Point3D, Pose2D, compose, inverse, symmetric_epe
from .masks import OverlapMask, overlap_mask
from .metrics import EpisodeRecord, MetricsReport, evaluate

__all__ = [
    "CameraIntrinsics", "Correspondence3D", "CorrespondenceSet", "DepthMap", "EpisodeRecord",
    "EstimatorKind", "GcpeConfig", "GcpeResult", "MetricsReport", "OverlapMask", "Point3D", "Pose2D",
    "PriorDistribution", "compose", "estimate_pose", "estimate_relative_pose", "evaluate", "inverse",
    "nnsr_match", "overlap_mask", "randomized_weighted_procrustes", "symmetric_epe", "weighted_procrustes",
]
