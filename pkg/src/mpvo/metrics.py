"""Navigation (Success, SPL, SoftSPL, d_g) and pose (RPE, ATE) metrics."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import EmptyInput, LengthMismatch
from .geometry import Pose2D, compose, wrap_angle

SUCCESS_DISTANCE = 0.36

CSV_COLUMNS = ("Success", "SPL", "SoftSPL", "d_g", "RPE-Rot", "RPE-Trans", "ATE-Trans")


@dataclass
class EpisodeRecord:
    gt_relative_poses: list[Pose2D]
    est_relative_poses: list[Pose2D]
    actions: list[Any]
    goal: tuple[float, float]
    path_length: float
    shortest_path_length: float
    initial_distance: float
    final_distance: float
    stop_distance: float
    success: bool
    failure_flags: list[bool] = field(default_factory=list)
    episode_id: int = 0
    seed: int = 0
    estimator: str = ""
    gt_absolute_poses: list[Pose2D] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.gt_relative_poses) != len(self.est_relative_poses):
            raise LengthMismatch("gt and estimated pose lists differ in length")
        if self.path_length < 0:
            raise ValueError("path_length must be >= 0")
        if self.shortest_path_length <= 0:
            raise ValueError("shortest_path_length must be > 0")
        if self.initial_distance <= 0:
            raise ValueError("initial_distance must be > 0")

    @property
    def n_steps(self) -> int:
        return len(self.gt_relative_poses)


@dataclass(frozen=True)
class MetricsReport:
    success_rate: float
    spl: float
    soft_spl: float
    mean_d_g: float
    rpe_rot_mae: float
    rpe_trans_mae: float
    ate_trans_mae: float
    n_episodes: int

    def row(self) -> list[float]:
        return [self.success_rate, self.spl, self.soft_spl, self.mean_d_g,
                self.rpe_rot_mae, self.rpe_trans_mae, self.ate_trans_mae]

    def as_dict(self) -> dict:
        return asdict(self)


def _mean(values) -> float:
    values = list(values)
    return math.fsum(values) / len(values)


def _require(episodes: Sequence[EpisodeRecord]) -> None:
    if len(episodes) == 0:
        raise EmptyInput("no episodes")


def _check_aligned(ep: EpisodeRecord) -> None:
    if len(ep.gt_relative_poses) != len(ep.est_relative_poses):
        raise LengthMismatch(f"episode {ep.episode_id}: gt/est length mismatch")


def success(stop_distance: float, threshold: float = SUCCESS_DISTANCE) -> bool:
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    return stop_distance <= threshold


def _efficiency(ep: EpisodeRecord) -> float:
    return ep.shortest_path_length / max(ep.path_length, ep.shortest_path_length)


def success_rate(episodes: Sequence[EpisodeRecord]) -> float:
    _require(episodes)
    return 100.0 * _mean(1.0 if ep.success else 0.0 for ep in episodes)


def spl(episodes: Sequence[EpisodeRecord]) -> float:
    _require(episodes)
    return 100.0 * _mean((1.0 if ep.success else 0.0) * _efficiency(ep) for ep in episodes)


def soft_spl(episodes: Sequence[EpisodeRecord], clamp: bool = False) -> float:
    """Progress-weighted SPL.  Progress ``1 - d_T/d_0`` is unclamped unless ``clamp``."""
    _require(episodes)

    def progress(ep):
        p = 1.0 - ep.final_distance / ep.initial_distance
        return min(max(p, 0.0), 1.0) if clamp else p

    return 100.0 * _mean(progress(ep) * _efficiency(ep) for ep in episodes)


def mean_stop_distance(episodes: Sequence[EpisodeRecord]) -> float:
    """Mean distance to goal at episode end, in centimetres."""
    _require(episodes)
    return 100.0 * _mean(ep.stop_distance for ep in episodes)


def rotation_error_trace(pred: Pose2D, gt: Pose2D) -> float:
    """Geodesic angle between yaw rotations via arccos((tr(R_pred^-1 R_gt) - 1) / 2)."""

    def rz(theta):
        c, s = math.cos(theta), math.sin(theta)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    r = rz(pred.dtheta).T @ rz(gt.dtheta)
    return math.acos(min(1.0, max(-1.0, (np.trace(r) - 1.0) / 2.0)))


def rotation_error(pred: Pose2D, gt: Pose2D) -> float:
    return abs(wrap_angle(gt.dtheta - pred.dtheta))


def _episode_mean(values: list[float]) -> float:
    # an episode without steps carries no pose error
    return _mean(values) if values else 0.0


def rpe_rotation(episodes: Sequence[EpisodeRecord]) -> float:
    """Mean per-frame-pair rotation error in degrees (episode then corpus mean)."""
    _require(episodes)
    per_episode = []
    for ep in episodes:
        _check_aligned(ep)
        per_episode.append(_episode_mean(
            [rotation_error(p, g) for p, g in zip(ep.est_relative_poses, ep.gt_relative_poses)]))
    return math.degrees(_mean(per_episode))


def rpe_translation(episodes: Sequence[EpisodeRecord]) -> float:
    """Mean per-frame-pair translation error in centimetres."""
    _require(episodes)
    per_episode = []
    for ep in episodes:
        _check_aligned(ep)
        per_episode.append(_episode_mean(
            [math.hypot(p.dx - g.dx, p.dy - g.dy)
             for p, g in zip(ep.est_relative_poses, ep.gt_relative_poses)]))
    return 100.0 * _mean(per_episode)


def integrate(relative_poses: Sequence[Pose2D], start: Pose2D | None = None) -> list[Pose2D]:
    """Absolute poses after each relative step, by right-multiplication."""
    pose = Pose2D.identity() if start is None else start
    out = []
    for rel in relative_poses:
        pose = compose(pose, rel)
        out.append(pose)
    return out


def ate_per_episode(ep: EpisodeRecord) -> float:
    """Mean absolute translation error of one episode, in metres."""
    _check_aligned(ep)
    est = integrate(ep.est_relative_poses)
    gt = integrate(ep.gt_relative_poses)
    return _episode_mean([math.hypot(p.dx - g.dx, p.dy - g.dy) for p, g in zip(est, gt)])


def ate_translation(episodes: Sequence[EpisodeRecord]) -> float:
    """Mean absolute trajectory translation error in centimetres, no alignment."""
    _require(episodes)
    return 100.0 * _mean(ate_per_episode(ep) for ep in episodes)


def evaluate(episodes: Sequence[EpisodeRecord]) -> MetricsReport:
    _require(episodes)
    return MetricsReport(
        success_rate=success_rate(episodes),
        spl=spl(episodes),
        soft_spl=soft_spl(episodes),
        mean_d_g=mean_stop_distance(episodes),
        rpe_rot_mae=rpe_rotation(episodes),
        rpe_trans_mae=rpe_translation(episodes),
        ate_trans_mae=ate_translation(episodes),
        n_episodes=len(episodes),
    )


def format_csv(rows: Sequence[tuple[str, MetricsReport]], precision: int = 2) -> str:
    """CSV text with a leading Method column followed by the metric columns."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("Method",) + CSV_COLUMNS + ("Episodes",))
    for name, rep in rows:
        writer.writerow([name] + [f"{v:.{precision}f}" for v in rep.row()] + [rep.n_episodes])
    return buf.getvalue()
