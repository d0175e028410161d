"""Geometric coarse pose estimation by prior-biased iterative sampling.

Candidate SE(2) poses are drawn around a motion prior, alternating between
rotation-only and translation-only perturbations.  Each candidate re-weights
the 3D-3D correspondences by the inverse of their symmetric endpoint error,
multiplied by the weights carried over from the previous iteration's winner.
The candidate with the largest total weight becomes the next sampling mean
and all standard deviations are halved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import EmptyCorrespondences
from .geometry import Point3D, Pose2D, symmetric_epe_batch, wrap_angle


class Correspondence3D(NamedTuple):
    pa: Point3D
    pb: Point3D
    confidence: float


class CorrespondenceSet:
    """Top-m 3D-3D correspondences sorted by descending confidence.

    Stored column-wise: ``pa`` and ``pb`` are (N, 3) arrays, ``confidence``
    is (N,).  ``pb`` is expected to be approximately ``T(pa)`` for the pose
    ``T`` being estimated.
    """

    def __init__(self, pa, pb, confidence=None, m: int | None = None):
        pa = np.asarray(pa, dtype=np.float64).reshape(-1, 3)
        pb = np.asarray(pb, dtype=np.float64).reshape(-1, 3)
        if pa.shape != pb.shape:
            raise ValueError("pa and pb must have the same shape")
        if confidence is None:
            confidence = np.ones(len(pa))
        confidence = np.asarray(confidence, dtype=np.float64).reshape(-1)
        if len(confidence) != len(pa):
            raise ValueError("one confidence per correspondence is required")
        if np.any((confidence < 0) | (confidence > 1)):
            raise ValueError("confidence must lie in [0, 1]")
        if not (np.all(np.isfinite(pa)) and np.all(np.isfinite(pb))):
            raise ValueError("correspondence points must be finite")
        order = np.argsort(-confidence, kind="stable")
        if m is not None:
            if m < 0:
                raise ValueError("m must be non-negative")
            order = order[:m]
        self.pa = pa[order]
        self.pb = pb[order]
        self.confidence = confidence[order]
        self.m = len(self.pa) if m is None else int(m)

    @classmethod
    def from_items(cls, items: Iterable[Correspondence3D], m: int | None = None) -> CorrespondenceSet:
        items = list(items)
        if not items:
            return cls(np.empty((0, 3)), np.empty((0, 3)), np.empty(0), m=m)
        return cls(
            [tuple(c.pa) for c in items],
            [tuple(c.pb) for c in items],
            [c.confidence for c in items],
            m=m,
        )

    @classmethod
    def empty(cls, m: int | None = None) -> CorrespondenceSet:
        return cls(np.empty((0, 3)), np.empty((0, 3)), np.empty(0), m=m)

    @property
    def items(self) -> list[Correspondence3D]:
        return list(self)

    def __len__(self) -> int:
        return len(self.pa)

    def __iter__(self) -> Iterator[Correspondence3D]:
        for a, b, c in zip(self.pa, self.pb, self.confidence):
            yield Correspondence3D(Point3D(*a), Point3D(*b), float(c))

    def __repr__(self) -> str:
        return f"CorrespondenceSet(n={len(self)}, m={self.m})"

    def subset(self, idx) -> CorrespondenceSet:
        return CorrespondenceSet(self.pa[idx], self.pb[idx], self.confidence[idx])


@dataclass(frozen=True)
class PriorDistribution:
    mean: Pose2D
    sigma_x: float = 0.06
    sigma_y: float = 0.06
    sigma_theta: float = math.radians(4.0)

    def __post_init__(self) -> None:
        if min(self.sigma_x, self.sigma_y, self.sigma_theta) <= 0:
            raise ValueError("prior standard deviations must be positive")

    def halved(self) -> PriorDistribution:
        return replace(self, sigma_x=self.sigma_x / 2, sigma_y=self.sigma_y / 2,
                       sigma_theta=self.sigma_theta / 2)

    def with_mean(self, mean: Pose2D) -> PriorDistribution:
        return replace(self, mean=mean)


@dataclass(frozen=True)
class GcpeConfig:
    n_samples: int = 64
    epsilon_score: float = 0.01
    max_iterations: int = 20
    epe_epsilon: float = 1e-8
    rng_seed: int = 0
    sigma_schedule: str = "sampled"
    kernel_scale: float = 32.0
    kernel_cap: float = 0.5

    def __post_init__(self) -> None:
        if self.sigma_schedule not in ("all", "sampled"):
            raise ValueError("sigma_schedule must be 'all' or 'sampled'")
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        if self.epsilon_score <= 0:
            raise ValueError("epsilon_score must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.epe_epsilon <= 0:
            raise ValueError("epe_epsilon must be positive")


@dataclass
class GcpeResult:
    pose: Pose2D
    iterations: int
    final_score: float
    score_history: list[float] = field(default_factory=list)
    sigma_history: list[tuple[float, float, float]] = field(default_factory=list)
    sampled_axes: list[str] = field(default_factory=list)

    def __iter__(self):
        # allows ``pose, iterations, score = estimate_relative_pose(...)``
        return iter((self.pose, self.iterations, self.final_score))


def _candidates_around(mean: Pose2D, n: int) -> np.ndarray:
    out = np.empty((n, 3))
    out[:] = (mean.dx, mean.dy, mean.dtheta)
    return out


def sample_rot(prior: PriorDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """Rotation-only candidates as an (n, 3) array; row 0 is the prior mean."""
    if n < 2:
        raise ValueError("n must be >= 2")
    out = _candidates_around(prior.mean, n)
    out[1:, 2] = wrap_angle(rng.normal(prior.mean.dtheta, prior.sigma_theta, n - 1))
    return out


def sample_trans(prior: PriorDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """Translation-only candidates as an (n, 3) array; row 0 is the prior mean."""
    if n < 2:
        raise ValueError("n must be >= 2")
    out = _candidates_around(prior.mean, n)
    draws = rng.normal(0.0, 1.0, (n - 1, 2))
    out[1:, 0] = prior.mean.dx + prior.sigma_x * draws[:, 0]
    out[1:, 1] = prior.mean.dy + prior.sigma_y * draws[:, 1]
    return out


def mpcw_weights(corrs: CorrespondenceSet, candidates, prev_best: np.ndarray | None,
                 cfg: GcpeConfig, guard: float | None = None) -> np.ndarray:
    """Motion-prior correspondence weights, shape (n_candidates, n_corrs).

    Entry (j, i) is ``prev_best[i] / (symmetric_epe(candidate_j, pa_i, pb_i) + epe_epsilon)``,
    with ``prev_best`` treated as all ones when absent.
    """
    if len(corrs) == 0:
        raise EmptyCorrespondences("no correspondences to weigh")
    candidates = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    guard = cfg.epe_epsilon if guard is None else guard
    inv_epe = 1.0 / (symmetric_epe_batch(candidates, corrs.pa, corrs.pb) + guard)
    if prev_best is None:
        return inv_epe
    prev_best = np.asarray(prev_best, dtype=np.float64)
    if prev_best.shape != (len(corrs),):
        raise ValueError("prev_best must hold one weight per correspondence")
    return prev_best[None, :] * inv_epe


def score(weight_row) -> float:
    return float(np.sum(weight_row))


def estimate_relative_pose(corrs: CorrespondenceSet, prior: PriorDistribution,
                           cfg: GcpeConfig = GcpeConfig()) -> GcpeResult:
    """Refine ``prior.mean`` into a coarse pose mapping ``corrs.pa`` onto ``corrs.pb``.

    Even iterations sample rotations, odd iterations translations.  The loop
    always runs at least two iterations (when ``max_iterations`` allows) and
    stops once the relative improvement of the best score is at most
    ``epsilon_score``.
    """
    if len(corrs) == 0:
        raise EmptyCorrespondences("no correspondences to estimate from")
    rng = np.random.default_rng(cfg.rng_seed)
    mean = prior.mean
    sigmas = prior
    best_weights: np.ndarray | None = None
    last_best = None
    result = GcpeResult(pose=mean, iterations=0, final_score=0.0)
    radius2 = float(np.mean(np.sum(corrs.pa[:, :2] ** 2, axis=1)))

    for j in range(cfg.max_iterations):
        if j % 2 == 0:
            samples = sample_rot(sigmas.with_mean(mean), cfg.n_samples, rng)
            result.sampled_axes.append("rot")
        else:
            samples = sample_trans(sigmas.with_mean(mean), cfg.n_samples, rng)
            result.sampled_axes.append("trans")
        result.sigma_history.append((sigmas.sigma_x, sigmas.sigma_y, sigmas.sigma_theta))

        guard = cfg.epe_epsilon
        if cfg.kernel_scale > 0:
            spread = (sigmas.sigma_x ** 2 + sigmas.sigma_y ** 2
                      + sigmas.sigma_theta ** 2 * radius2)
            guard = max(guard, min(cfg.kernel_cap, cfg.kernel_scale * 2.0 * spread))
        weights = mpcw_weights(corrs, samples, best_weights, cfg, guard)
        scores = weights.sum(axis=1)
        idx = int(np.argmax(scores))
        best = float(scores[idx])
        if not math.isfinite(best):
            # weights overflowed; keep the last finite estimate
            break
        best_weights = weights[idx]
        mean = Pose2D.from_array(samples[idx])
        if cfg.sigma_schedule == "all":
            sigmas = sigmas.halved()
        elif j % 2 == 0:
            sigmas = replace(sigmas, sigma_theta=sigmas.sigma_theta / 2)
        else:
            sigmas = replace(sigmas, sigma_x=sigmas.sigma_x / 2, sigma_y=sigmas.sigma_y / 2)
        result.iterations = j + 1
        result.score_history.append(best)
        result.pose, result.final_score = mean, best

        if last_best is not None and (best - last_best) / best <= cfg.epsilon_score:
            break
        last_best = best
    return result


def estimate_pose(corrs: CorrespondenceSet, prior_mean: Pose2D, sigmas: Sequence[float] | None = None,
                  cfg: GcpeConfig = GcpeConfig()) -> Pose2D:
    """Shorthand returning only the pose; ``sigmas`` is (sigma_x, sigma_y, sigma_theta)."""
    if sigmas is None:
        prior = PriorDistribution(prior_mean)
    else:
        prior = PriorDistribution(prior_mean, *sigmas)
    return estimate_relative_pose(corrs, prior, cfg).pose
