"""Synthetic point-goal navigation with landmark worlds and noisy actuation.

Worlds are obstacle-free boxes whose walls (and some interior clutter) carry
point landmarks with random unit descriptors.  The agent observes landmarks
in its field of view, pairs them across consecutive frames (with injected
outliers), estimates its relative motion with a chosen estimator and drives
towards the goal with a greedy policy fed by the integrated estimate.

Correspondences produced here store the *current*-frame point in ``pa`` and
the *previous*-frame point in ``pb``.  With that ordering the transform that
registers ``pa`` onto ``pb`` is exactly the agent's relative motion between
the two frames, i.e. the same quantity as the action prior.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from . import baselines, gcpe
from .baselines import EstimatorKind
from .errors import InsufficientSupport, InvalidAction, MpvoError
from .gcpe import CorrespondenceSet, GcpeConfig, PriorDistribution
from .geometry import Pose2D, compose, inverse, transform_point, transform_points
from .metrics import EpisodeRecord


class ActionType(str, enum.Enum):
    STOP = "Stop"
    MOVE_FORWARD = "MoveForward"
    TURN_LEFT = "TurnLeft"
    TURN_RIGHT = "TurnRight"


@dataclass(frozen=True)
class ActionModel:
    forward_distance: float = 0.25
    turn_angle: float = 30.0  # degrees
    trans_noise_sigma: float = 0.015
    rot_noise_sigma: float = 1.0  # degrees

    def __post_init__(self) -> None:
        if self.forward_distance <= 0 or self.turn_angle <= 0:
            raise ValueError("forward_distance and turn_angle must be positive")
        if self.trans_noise_sigma < 0 or self.rot_noise_sigma < 0:
            raise ValueError("noise sigmas must be non-negative")

    def nominal(self, action: ActionType) -> Pose2D:
        """Noise-free relative motion commanded by ``action``."""
        if action == ActionType.MOVE_FORWARD:
            return Pose2D(self.forward_distance, 0.0, 0.0)
        if action == ActionType.TURN_LEFT:
            return Pose2D(0.0, 0.0, math.radians(self.turn_angle))
        if action == ActionType.TURN_RIGHT:
            return Pose2D(0.0, 0.0, -math.radians(self.turn_angle))
        raise InvalidAction(f"{action} has no motion")


@dataclass(frozen=True)
class SensorModel:
    hfov: float = 90.0  # degrees
    max_range: float = 10.0
    min_range: float = 0.1
    depth_noise_sigma: float = 0.005
    outlier_rate: float = 0.4
    descriptor_noise_sigma: float = 0.05

    def __post_init__(self) -> None:
        if not 0 < self.hfov < 180:
            raise ValueError("hfov must lie in (0, 180)")
        if not 0 < self.min_range < self.max_range:
            raise ValueError("need 0 < min_range < max_range")
        if not 0 <= self.outlier_rate < 1:
            raise ValueError("outlier_rate must lie in [0, 1)")
        if self.depth_noise_sigma < 0 or self.descriptor_noise_sigma < 0:
            raise ValueError("noise sigmas must be non-negative")


@dataclass
class World:
    landmarks: np.ndarray  # (N, 3)
    descriptors: np.ndarray  # (N, D) unit rows
    bounds: tuple[tuple[float, float, float], tuple[float, float, float]]
    rng_seed: int = 0
    ids: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.landmarks = np.asarray(self.landmarks, dtype=np.float64).reshape(-1, 3)
        self.descriptors = np.asarray(self.descriptors, dtype=np.float64)
        if len(self.landmarks) < 1:
            raise ValueError("a world needs at least one landmark")
        if self.ids is None:
            self.ids = np.arange(len(self.landmarks))
        self.ids = np.asarray(self.ids, dtype=np.int64)
        if len(np.unique(self.ids)) != len(self.ids):
            raise ValueError("landmark ids must be unique")
        lo, hi = np.asarray(self.bounds[0]), np.asarray(self.bounds[1])
        if np.any(self.landmarks < lo - 1e-9) or np.any(self.landmarks > hi + 1e-9):
            raise ValueError("landmarks must lie inside the world bounds")

    def contains(self, x: float, y: float) -> bool:
        (x0, y0, _), (x1, y1, _) = self.bounds
        return x0 <= x <= x1 and y0 <= y <= y1

    def to_json(self) -> dict:
        return {
            "rng_seed": self.rng_seed,
            "bounds": [list(self.bounds[0]), list(self.bounds[1])],
            "landmarks": [
                {"id": int(i), "xyz": [float(v) for v in p], "descriptor": [float(v) for v in d]}
                for i, p, d in zip(self.ids, self.landmarks, self.descriptors)
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> World:
        lms = obj["landmarks"]
        return cls(
            landmarks=[lm["xyz"] for lm in lms],
            descriptors=[lm["descriptor"] for lm in lms],
            bounds=(tuple(obj["bounds"][0]), tuple(obj["bounds"][1])),
            rng_seed=int(obj.get("rng_seed", 0)),
            ids=[lm["id"] for lm in lms],
        )


@dataclass(frozen=True)
class EpisodeSpec:
    start_pose: Pose2D
    goal: tuple[float, float]
    max_steps: int = 500
    success_radius: float = 0.36
    episode_id: int = 0
    seed: int = 0
    fixed_length: bool = False  # never stop; always run max_steps actions

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def to_json(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "seed": self.seed,
            "start_pose": [self.start_pose.dx, self.start_pose.dy, math.degrees(self.start_pose.dtheta)],
            "goal": list(self.goal),
            "max_steps": self.max_steps,
            "success_radius": self.success_radius,
            "fixed_length": self.fixed_length,
        }

    @classmethod
    def from_json(cls, obj: dict) -> EpisodeSpec:
        sp = obj["start_pose"]
        return cls(
            start_pose=Pose2D.from_degrees(*sp),
            goal=(float(obj["goal"][0]), float(obj["goal"][1])),
            max_steps=int(obj.get("max_steps", 500)),
            success_radius=float(obj.get("success_radius", 0.36)),
            episode_id=int(obj.get("episode_id", 0)),
            seed=int(obj.get("seed", 0)),
            fixed_length=bool(obj.get("fixed_length", False)),
        )


@dataclass
class Observation:
    ids: np.ndarray
    points: np.ndarray  # agent frame, (N, 3)
    descriptors: np.ndarray

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class EstimatorSpec:
    """Estimator choice plus its parameters for closed-loop runs."""

    kind: EstimatorKind = EstimatorKind.GCPE
    gcpe: GcpeConfig = GcpeConfig()
    sigma_x: float = 0.06
    sigma_y: float = 0.06
    sigma_theta_deg: float = 4.0
    rwp_rounds: int = 128
    rwp_subset_fraction: float = 0.1
    rwp_inlier_scale: float = 0.05
    top_m: int = 100
    min_correspondences: int = 4
    fallback: str = "action-prior"

    @property
    def name(self) -> str:
        return self.kind.value


def unit_rows(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def generate_world(seed: int, size: tuple[float, float] = (10.0, 10.0), height: float = 2.5,
                   n_landmarks: int = 200, interior_fraction: float = 0.2,
                   descriptor_dim: int = 32, segment_length: float = 2.0,
                   featureless_fraction: float = 0.0, featureless_density: float = 0.05) -> World:
    """Box world with landmarks on the four walls plus some interior clutter.

    The perimeter is cut into segments of ``segment_length`` meters; a
    ``featureless_fraction`` of them carries only ``featureless_density``
    times the landmark density of a textured segment.
    """
    rng = np.random.default_rng(seed)
    sx, sy = size
    n_interior = int(round(interior_fraction * n_landmarks))
    n_wall = n_landmarks - n_interior
    perimeter = 2 * (sx + sy)
    n_seg = max(1, int(math.ceil(perimeter / segment_length)))
    seg_len = perimeter / n_seg
    density = np.where(rng.random(n_seg) < featureless_fraction, featureless_density, 1.0)
    seg = rng.choice(n_seg, size=n_wall, p=density / density.sum())
    s = (seg + rng.random(n_wall)) * seg_len
    wall = np.empty((n_wall, 2))
    for i, t in enumerate(s):
        if t < sx:
            wall[i] = (t, 0.0)
        elif t < sx + sy:
            wall[i] = (sx, t - sx)
        elif t < 2 * sx + sy:
            wall[i] = (2 * sx + sy - t, sy)
        else:
            wall[i] = (0.0, min(perimeter - t, sy))
    interior = rng.uniform((0.0, 0.0), (sx, sy), (n_interior, 2))
    xy = np.vstack([wall, interior])
    z = rng.uniform(0.0, height, n_landmarks)
    landmarks = np.column_stack([xy, z])
    descriptors = unit_rows(rng.normal(size=(n_landmarks, descriptor_dim)))
    return World(landmarks, descriptors, ((0.0, 0.0, 0.0), (sx, sy, height)), rng_seed=seed)


def generate_episode_specs(world: World, n: int, seed: int, min_goal_distance: float = 1.0,
                           max_goal_distance: float | None = None, margin: float = 0.5,
                           max_steps: int = 500, success_radius: float = 0.36,
                           fixed_length: bool = False) -> list[EpisodeSpec]:
    """Random start poses and reachable goals inside the world's bounds."""
    (x0, y0, _), (x1, y1, _) = world.bounds
    lo, hi = (x0 + margin, y0 + margin), (x1 - margin, y1 - margin)
    specs = []
    for ep in range(n):
        rng = np.random.default_rng([seed, ep])
        for _ in range(10_000):
            start = rng.uniform(lo, hi)
            goal = rng.uniform(lo, hi)
            d = float(np.hypot(*(goal - start)))
            if d >= min_goal_distance and (max_goal_distance is None or d <= max_goal_distance):
                break
        else:
            raise ValueError("could not place a goal at the requested distance")
        heading = rng.uniform(-math.pi, math.pi)
        ep_seed = int(rng.integers(0, 2**63 - 1))
        specs.append(EpisodeSpec(Pose2D(float(start[0]), float(start[1]), heading),
                                 (float(goal[0]), float(goal[1])), max_steps, success_radius,
                                 episode_id=ep, seed=ep_seed, fixed_length=fixed_length))
    return specs


def visible_mask(rel: np.ndarray, sensor: SensorModel) -> np.ndarray:
    rng_xy = np.hypot(rel[:, 0], rel[:, 1])
    bearing = np.arctan2(rel[:, 1], rel[:, 0])
    half = math.radians(sensor.hfov) / 2.0
    return (rng_xy >= sensor.min_range) & (rng_xy <= sensor.max_range) & (np.abs(bearing) <= half)


def observe(world: World, agent_pose: Pose2D, sensor: SensorModel, rng: np.random.Generator,
            agent_height: float = 0.0) -> Observation:
    """Landmarks in the field of view, in the agent frame, with noise.

    A landmark is visible iff its planar range is in ``[min_range, max_range]``
    and its bearing is within ``hfov/2`` of the heading.  Points get
    isotropic Gaussian noise; descriptors are perturbed and renormalised.
    """
    rel = transform_points(inverse(agent_pose), world.landmarks)
    rel[:, 2] -= agent_height
    vis = visible_mask(rel, sensor)
    pts = rel[vis]
    desc = world.descriptors[vis]
    if sensor.depth_noise_sigma > 0 and len(pts):
        pts = pts + rng.normal(0.0, sensor.depth_noise_sigma, pts.shape)
    if sensor.descriptor_noise_sigma > 0 and len(desc):
        desc = unit_rows(desc + rng.normal(0.0, sensor.descriptor_noise_sigma, desc.shape))
    return Observation(world.ids[vis], pts, desc)


def _random_frustum_point(rng: np.random.Generator, sensor: SensorModel) -> np.ndarray:
    half = math.radians(sensor.hfov) / 2.0
    r = rng.uniform(sensor.min_range, sensor.max_range)
    b = rng.uniform(-half, half)
    return np.array([r * math.cos(b), r * math.sin(b), rng.uniform(-1.0, 1.0)])


def make_correspondences(obs_prev: Observation, obs_curr: Observation, sensor: SensorModel,
                         m: int, rng: np.random.Generator) -> tuple[CorrespondenceSet, np.ndarray]:
    """Pair landmarks seen in both frames and corrupt a fraction of the pairs.

    Returns the correspondence set (``pa`` current frame, ``pb`` previous
    frame, truncated to the ``m`` most confident) and the matching boolean
    outlier indicator.  An outlier's ``pb`` is the previous-frame position of
    another visible landmark, or a random frustum point when none exists.
    """
    shared, i_prev, i_curr = np.intersect1d(obs_prev.ids, obs_curr.ids, return_indices=True)
    n = len(shared)
    if n == 0:
        return CorrespondenceSet.empty(m), np.zeros(0, dtype=bool)
    pa = obs_curr.points[i_curr].copy()
    pb = obs_prev.points[i_prev].copy()
    outlier = rng.random(n) < sensor.outlier_rate
    n_prev = len(obs_prev)
    for k in np.flatnonzero(outlier):
        if n_prev > 1:
            j = int(rng.integers(0, n_prev - 1))
            if j >= i_prev[k]:
                j += 1
            pb[k] = obs_prev.points[j]
        else:
            pb[k] = _random_frustum_point(rng, sensor)
    conf = np.where(outlier, rng.uniform(0.3, 0.9, n), rng.uniform(0.7, 1.0, n))
    order = np.argsort(-conf, kind="stable")[:m]
    return CorrespondenceSet(pa[order], pb[order], conf[order], m=m), outlier[order]


def step(agent_pose: Pose2D, action: ActionType, model: ActionModel,
         rng: np.random.Generator) -> Pose2D:
    """Apply a noisy action; returns the new absolute pose.

    Every motion gets independent Gaussian noise on dx, dy (``trans_noise_sigma``)
    and dtheta (``rot_noise_sigma``) on top of its nominal displacement.
    """
    if action == ActionType.STOP:
        raise InvalidAction("Stop does not move the agent")
    try:
        nominal = model.nominal(ActionType(action))
    except ValueError as exc:
        raise InvalidAction(f"unknown action {action!r}") from exc
    noise = rng.normal(0.0, 1.0, 3)
    motion = Pose2D(nominal.dx + model.trans_noise_sigma * noise[0],
                    nominal.dy + model.trans_noise_sigma * noise[1],
                    nominal.dtheta + math.radians(model.rot_noise_sigma) * noise[2])
    return compose(agent_pose, motion)


def greedy_policy(est_pose: Pose2D, goal: tuple[float, float], spec: EpisodeSpec,
                  turn_angle: float = math.radians(30.0)) -> ActionType:
    """Turn towards the goal until within half a turn step, then move forward."""
    g = transform_point(inverse(est_pose), (goal[0], goal[1], 0.0))
    if math.hypot(g.x, g.y) <= spec.success_radius:
        return ActionType.STOP
    err = math.atan2(g.y, g.x)
    if abs(err) > turn_angle / 2.0:
        return ActionType.TURN_LEFT if err > 0 else ActionType.TURN_RIGHT
    return ActionType.MOVE_FORWARD


def estimate_motion(est: EstimatorSpec, corrs: CorrespondenceSet, prior: Pose2D, gt: Pose2D,
                    seed: int) -> Pose2D:
    """Run one estimator; may raise :class:`MpvoError` subclasses."""
    if est.kind == EstimatorKind.GT_ORACLE:
        return gt
    if est.kind == EstimatorKind.ACTION_PRIOR:
        return prior
    if len(corrs) < est.min_correspondences:
        raise InsufficientSupport(f"{len(corrs)} correspondences < {est.min_correspondences}")
    if est.kind == EstimatorKind.GCPE:
        dist = PriorDistribution(prior, est.sigma_x, est.sigma_y, math.radians(est.sigma_theta_deg))
        cfg = replace(est.gcpe, rng_seed=seed)
        return gcpe.estimate_relative_pose(corrs, dist, cfg).pose
    if est.kind == EstimatorKind.WEIGHTED_PROCRUSTES:
        return baselines.weighted_procrustes(corrs)
    if est.kind == EstimatorKind.RANDOMIZED_WEIGHTED_PROCRUSTES:
        return baselines.randomized_weighted_procrustes(
            corrs, est.rwp_rounds, est.rwp_subset_fraction, seed, est.rwp_inlier_scale)
    raise ValueError(f"unsupported estimator {est.kind}")


def _seed_of(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**63 - 1))


def run_episode(world: World, spec: EpisodeSpec, estimator: EstimatorSpec,
                sensor: SensorModel = SensorModel(), action_model: ActionModel = ActionModel(),
                rng_seed: int | None = None) -> EpisodeRecord:
    """Closed-loop episode: observe, match, estimate, integrate, act.

    The estimator only ever sees the nominal motion of the commanded action
    as its prior; actuation noise is applied to the ground-truth pose alone.
    """
    seed = spec.seed if rng_seed is None else rng_seed
    act_rng = np.random.default_rng([seed, 0])
    obs_rng = np.random.default_rng([seed, 1])
    corr_rng = np.random.default_rng([seed, 2])
    est_rng = np.random.default_rng([seed, 3])

    start = spec.start_pose
    goal_start = transform_point(inverse(start), (spec.goal[0], spec.goal[1], 0.0))
    goal_local = (goal_start.x, goal_start.y)
    turn = math.radians(action_model.turn_angle)

    gt_abs = start
    est_abs = Pose2D.identity()
    obs_prev = observe(world, gt_abs, sensor, obs_rng)
    gt_rel, est_rel, actions, failures, gt_traj = [], [], [], [], [start]
    path = 0.0
    stopped = False

    for _ in range(spec.max_steps):
        action = greedy_policy(est_abs, goal_local, spec, turn)
        if action == ActionType.STOP and spec.fixed_length:
            action = ActionType.TURN_LEFT
        if action == ActionType.STOP:
            actions.append(action)
            stopped = True
            break
        gt_next = step(gt_abs, action, action_model, act_rng)
        obs_curr = observe(world, gt_next, sensor, obs_rng)
        corrs, _ = make_correspondences(obs_prev, obs_curr, sensor, estimator.top_m, corr_rng)
        prior = action_model.nominal(action)
        true_rel = compose(inverse(gt_abs), gt_next)
        failed = False
        try:
            rel = estimate_motion(estimator, corrs, prior, true_rel, _seed_of(est_rng))
        except MpvoError:
            failed = True
            rel = prior if estimator.fallback == "action-prior" else Pose2D.identity()
        est_abs = compose(est_abs, rel)
        path += true_rel.translation_norm
        gt_rel.append(true_rel)
        est_rel.append(rel)
        actions.append(action)
        failures.append(failed)
        gt_traj.append(gt_next)
        gt_abs, obs_prev = gt_next, obs_curr

    d0 = math.hypot(spec.goal[0] - start.dx, spec.goal[1] - start.dy)
    d_final = math.hypot(spec.goal[0] - gt_abs.dx, spec.goal[1] - gt_abs.dy)
    record = EpisodeRecord(
        gt_relative_poses=gt_rel,
        est_relative_poses=est_rel,
        actions=actions,
        goal=spec.goal,
        path_length=path,
        shortest_path_length=d0,
        initial_distance=d0,
        final_distance=d_final,
        stop_distance=d_final,
        success=stopped and d_final <= spec.success_radius,
        failure_flags=failures,
        episode_id=spec.episode_id,
        seed=seed,
        estimator=estimator.name,
        gt_absolute_poses=gt_traj,
    )
    return record


def _pose_json(p: Pose2D) -> list[float]:
    return [p.dx, p.dy, math.degrees(p.dtheta)]


def episode_to_jsonl(record: EpisodeRecord) -> str:
    """One header object followed by one object per step.

    Header keys: type, episode_id, seed, estimator, goal, n_steps,
    path_length, shortest_path_length, initial_distance, final_distance,
    stop_distance, success, stopped.  Step keys: type, t, action, gt_rel,
    est_rel, failure_flag.  Poses are ``[dx_m, dy_m, dtheta_deg]``.
    """
    header = {
        "type": "header",
        "episode_id": record.episode_id,
        "seed": record.seed,
        "estimator": record.estimator,
        "goal": list(record.goal),
        "n_steps": record.n_steps,
        "path_length": record.path_length,
        "shortest_path_length": record.shortest_path_length,
        "initial_distance": record.initial_distance,
        "final_distance": record.final_distance,
        "stop_distance": record.stop_distance,
        "success": record.success,
        "stopped": bool(record.actions) and record.actions[-1] == ActionType.STOP,
    }
    lines = [json.dumps(header)]
    for t, (g, e, a, f) in enumerate(zip(record.gt_relative_poses, record.est_relative_poses,
                                         record.actions, record.failure_flags)):
        lines.append(json.dumps({
            "type": "step", "t": t, "action": ActionType(a).value,
            "gt_rel": _pose_json(g), "est_rel": _pose_json(e), "failure_flag": f,
        }))
    return "\n".join(lines) + "\n"


def episodes_from_jsonl(text: str) -> list[EpisodeRecord]:
    records: list[EpisodeRecord] = []
    header = None
    steps: list[dict] = []

    def flush():
        if header is None:
            return
        actions = [ActionType(s["action"]) for s in steps]
        if header.get("stopped"):
            actions.append(ActionType.STOP)
        records.append(EpisodeRecord(
            gt_relative_poses=[Pose2D.from_degrees(*s["gt_rel"]) for s in steps],
            est_relative_poses=[Pose2D.from_degrees(*s["est_rel"]) for s in steps],
            actions=actions,
            goal=tuple(header["goal"]),
            path_length=header["path_length"],
            shortest_path_length=header["shortest_path_length"],
            initial_distance=header["initial_distance"],
            final_distance=header["final_distance"],
            stop_distance=header["stop_distance"],
            success=header["success"],
            failure_flags=[s["failure_flag"] for s in steps],
            episode_id=header["episode_id"],
            seed=header["seed"],
            estimator=header["estimator"],
        ))

    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if obj["type"] == "header":
            flush()
            header, steps = obj, []
        else:
            steps.append(obj)
    flush()
    return records
