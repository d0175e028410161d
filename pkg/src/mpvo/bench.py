"""Benchmark configuration and the seeded episode-suite runner."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .baselines import EstimatorKind
from .errors import ConfigParse
from .gcpe import GcpeConfig
from .metrics import EpisodeRecord, MetricsReport, ate_per_episode, evaluate
from .sim import (ActionModel, EpisodeSpec, EstimatorSpec, SensorModel, World, generate_episode_specs,
                  generate_world, run_episode)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WorldParams:
    size_x: float = 20.0
    size_y: float = 20.0
    height: float = 2.5
    n_landmarks: int = 400
    interior_fraction: float = 0.2
    descriptor_dim: int = 32
    segment_length: float = 2.0
    featureless_fraction: float = 0.0
    featureless_density: float = 0.05


@dataclass(frozen=True)
class EpisodeParams:
    max_steps: int = 100
    success_radius: float = 0.36
    min_goal_distance: float = 4.0
    max_goal_distance: float | None = None
    margin: float = 0.5
    fixed_length: bool = False


@dataclass(frozen=True)
class BenchmarkConfig:
    estimators: tuple[EstimatorSpec, ...] = (
        EstimatorSpec(EstimatorKind.GCPE),
        EstimatorSpec(EstimatorKind.RANDOMIZED_WEIGHTED_PROCRUSTES),
        EstimatorSpec(EstimatorKind.WEIGHTED_PROCRUSTES),
    )
    world: WorldParams = WorldParams()
    episodes: EpisodeParams = EpisodeParams()
    sensor: SensorModel = SensorModel()
    action_model: ActionModel = ActionModel()
    n_episodes: int = 20
    base_seed: int = 0
    out_dir: str = "out"

    def __post_init__(self) -> None:
        if self.n_episodes < 1:
            raise ConfigParse("n_episodes must be >= 1")
        if not self.estimators:
            raise ConfigParse("at least one estimator is required")


def _build(cls, obj, what: str):
    if obj is None:
        return cls()
    if not isinstance(obj, dict):
        raise ConfigParse(f"{what} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(obj) - known
    if unknown:
        raise ConfigParse(f"unknown {what} keys: {sorted(unknown)}")
    try:
        return cls(**obj)
    except (TypeError, ValueError) as exc:
        raise ConfigParse(f"invalid {what}: {exc}") from exc


def _estimator_from_json(obj) -> EstimatorSpec:
    if isinstance(obj, str):
        obj = {"kind": obj}
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigParse("each estimator needs a 'kind'")
    obj = dict(obj)
    try:
        kind = EstimatorKind.parse(obj.pop("kind"))
    except ValueError as exc:
        raise ConfigParse(str(exc)) from exc
    gcpe_cfg = _build(GcpeConfig, obj.pop("gcpe", None), "gcpe")
    spec = _build(EstimatorSpec, obj, "estimator")
    return replace(spec, kind=kind, gcpe=gcpe_cfg)


def config_from_json(obj: dict) -> BenchmarkConfig:
    if not isinstance(obj, dict):
        raise ConfigParse("config must be a JSON object")
    obj = dict(obj)
    kwargs = {}
    if "estimators" in obj:
        ests = obj.pop("estimators")
        if not isinstance(ests, list):
            raise ConfigParse("estimators must be a list")
        kwargs["estimators"] = tuple(_estimator_from_json(e) for e in ests)
    for key, cls in (("world", WorldParams), ("episodes", EpisodeParams),
                     ("sensor", SensorModel), ("action_model", ActionModel)):
        if key in obj:
            kwargs[key] = _build(cls, obj.pop(key), key)
    for key, typ in (("n_episodes", int), ("base_seed", int), ("out_dir", str)):
        if key in obj:
            val = obj.pop(key)
            if typ is int and (not isinstance(val, int) or isinstance(val, bool)):
                raise ConfigParse(f"{key} must be an integer")
            kwargs[key] = typ(val)
    if obj:
        raise ConfigParse(f"unknown config keys: {sorted(obj)}")
    return BenchmarkConfig(**kwargs)


def load_config(path) -> BenchmarkConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParse(f"cannot read config {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParse(f"{path}: {exc}") from exc
    return config_from_json(obj)


def config_to_json(cfg: BenchmarkConfig) -> dict:
    out = asdict(cfg)
    out["estimators"] = [
        {**asdict(e), "kind": e.kind.value} for e in cfg.estimators
    ]
    return out


def make_world(cfg: BenchmarkConfig) -> World:
    w = cfg.world
    return generate_world(cfg.base_seed, (w.size_x, w.size_y), w.height, w.n_landmarks,
                          w.interior_fraction, w.descriptor_dim, w.segment_length,
                          w.featureless_fraction, w.featureless_density)


def make_episodes(cfg: BenchmarkConfig, world: World) -> list[EpisodeSpec]:
    e = cfg.episodes
    return generate_episode_specs(world, cfg.n_episodes, cfg.base_seed + 1, e.min_goal_distance,
                                  e.max_goal_distance, e.margin, e.max_steps, e.success_radius,
                                  e.fixed_length)


def _run_one(args) -> EpisodeRecord:
    world, spec, est, sensor, action_model = args
    return run_episode(world, spec, est, sensor, action_model)


def run_suite(cfg: BenchmarkConfig, estimator: EstimatorSpec, world: World | None = None,
              specs: list[EpisodeSpec] | None = None, jobs: int = 1) -> list[EpisodeRecord]:
    """Run ``estimator`` over the config's seeded episode set, in episode order."""
    world = make_world(cfg) if world is None else world
    specs = make_episodes(cfg, world) if specs is None else specs
    work = [(world, s, estimator, cfg.sensor, cfg.action_model) for s in specs]
    if jobs <= 1:
        return [_run_one(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, work, chunksize=max(1, len(work) // (4 * jobs))))


def run_benchmark(cfg: BenchmarkConfig, jobs: int = 1) -> list[tuple[EstimatorSpec, list[EpisodeRecord], MetricsReport]]:
    world = make_world(cfg)
    specs = make_episodes(cfg, world)
    out = []
    for est in cfg.estimators:
        log.info("running %s over %d episodes", est.name, len(specs))
        records = run_suite(cfg, est, world, specs, jobs)
        out.append((est, records, evaluate(records)))
    return out


def paired_bootstrap_ci(a, b, n_boot: int = 2000, level: float = 0.95, seed: int = 0) -> tuple[float, float, float]:
    """Mean of ``a - b`` and its percentile bootstrap interval over paired samples."""
    diff = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(diff), (n_boot, len(diff)))
    means = diff[idx].mean(axis=1)
    lo, hi = np.quantile(means, [(1 - level) / 2, 1 - (1 - level) / 2])
    return float(diff.mean()), float(lo), float(hi)


def per_episode_ate(records: list[EpisodeRecord]) -> np.ndarray:
    return np.array([ate_per_episode(r) for r in records])


def per_episode_rpe_trans(records: list[EpisodeRecord]) -> np.ndarray:
    out = []
    for r in records:
        errs = [np.hypot(p.dx - g.dx, p.dy - g.dy) for p, g in zip(r.est_relative_poses, r.gt_relative_poses)]
        out.append(float(np.mean(errs)) if errs else 0.0)
    return np.array(out)
