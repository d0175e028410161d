import json

import numpy as np
import pytest

from mpvo import bench
from mpvo.baselines import EstimatorKind
from mpvo.errors import ConfigParse
from mpvo.sim import EstimatorSpec


def test_defaults():
    cfg = bench.config_from_json({})
    assert cfg == bench.BenchmarkConfig()
    assert [e.kind for e in cfg.estimators] == [EstimatorKind.GCPE, EstimatorKind.RANDOMIZED_WEIGHTED_PROCRUSTES,
                                                 EstimatorKind.WEIGHTED_PROCRUSTES]


def test_nested_overrides():
    cfg = bench.config_from_json({
        "estimators": ["rwp", {"kind": "gcpe", "sigma_x": 0.1, "gcpe": {"n_samples": 16}}],
        "sensor": {"outlier_rate": 0.1},
        "episodes": {"fixed_length": True},
        "n_episodes": 7,
    })
    assert cfg.estimators[0].kind == EstimatorKind.RANDOMIZED_WEIGHTED_PROCRUSTES
    assert cfg.estimators[1].sigma_x == 0.1 and cfg.estimators[1].gcpe.n_samples == 16
    assert cfg.sensor.outlier_rate == 0.1 and cfg.episodes.fixed_length and cfg.n_episodes == 7


@pytest.mark.parametrize("obj", [[], {"n_episodes": 0}, {"n_episodes": 2.5}, {"n_episodes": True},
                                 {"estimators": "gcpe"}, {"estimators": [{"sigma_x": 1}]},
                                 {"estimators": ["nope"]}, {"estimators": [{"kind": "gcpe", "extra": 1}]},
                                 {"estimators": [{"kind": "gcpe", "gcpe": {"n_samples": 1}}]},
                                 {"sensor": {"outlier_rate": 1.5}}, {"sensor": 3}, {"colour": "red"}])
def test_rejections(obj):
    with pytest.raises(ConfigParse):
        bench.config_from_json(obj)


def test_json_round_trip():
    cfg = bench.config_from_json({"estimators": ["gcpe", "wp"], "base_seed": 3,
                                  "world": {"n_landmarks": 50}, "action_model": {"rot_noise_sigma": 2.0}})
    text = json.dumps(bench.config_to_json(cfg))
    assert bench.config_from_json(json.loads(text)) == cfg


def test_load_config(tmp_path):
    (tmp_path / "c.json").write_text('{"n_episodes": 4}')
    assert bench.load_config(tmp_path / "c.json").n_episodes == 4
    with pytest.raises(ConfigParse):
        bench.load_config(tmp_path / "missing.json")


def test_suite_is_deterministic_and_ordered():
    cfg = bench.config_from_json({"n_episodes": 4, "world": {"n_landmarks": 100, "size_x": 8, "size_y": 8},
                                  "episodes": {"max_steps": 10, "min_goal_distance": 2.0}})
    est = EstimatorSpec(EstimatorKind.GCPE)
    a = bench.run_suite(cfg, est)
    assert [r.episode_id for r in a] == [0, 1, 2, 3]
    assert a == bench.run_suite(cfg, est, jobs=2)


class TestBootstrap:
    def test_shifted_samples(self, rng):
        b = rng.normal(0, 1, 200)
        mean, lo, hi = bench.paired_bootstrap_ci(b + 1.0 + rng.normal(0, 0.1, 200), b)
        assert lo < mean < hi and lo > 0.9 and hi < 1.1

    def test_identical_samples(self, rng):
        a = rng.normal(0, 1, 50)
        assert bench.paired_bootstrap_ci(a, a) == (0.0, 0.0, 0.0)

    def test_deterministic_and_narrows_with_level(self, rng):
        a, b = rng.normal(0, 1, 80), rng.normal(0.2, 1, 80)
        assert bench.paired_bootstrap_ci(a, b, seed=4) == bench.paired_bootstrap_ci(a, b, seed=4)
        _, lo90, hi90 = bench.paired_bootstrap_ci(a, b, level=0.9)
        _, lo99, hi99 = bench.paired_bootstrap_ci(a, b, level=0.99)
        assert lo99 < lo90 and hi90 < hi99

    def test_coverage_of_normal_interval(self):
        rng = np.random.default_rng(8)
        covered = 0
        for i in range(200):
            d = rng.normal(0.5, 1.0, 60)
            _, lo, hi = bench.paired_bootstrap_ci(d, np.zeros(60), n_boot=500, seed=i)
            covered += lo <= 0.5 <= hi
        assert 0.88 <= covered / 200 <= 0.99
