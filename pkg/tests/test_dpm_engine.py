import json

import numpy as np
import pytest

from dpm_toolkit.datagen import Dataset, generate_uniform, make_rng
from dpm_toolkit.dpm_engine import (
    DpmConfig,
    HaltReason,
    dp_average,
    load_tree,
    node_selection_pmf,
    replay,
    run_dpm,
    save_result,
)
from dpm_toolkit.exceptions import ConfigValidationError
from dpm_toolkit.splitting import generate_candidates, sorted_projections


def test_config_rejects_unknown_field(two_gaussian_config):
    with pytest.raises(ConfigValidationError) as exc:
        DpmConfig.from_dict({**two_gaussian_config, "epsilon": 1.0})
    assert exc.value.field == "epsilon"


def test_config_rejects_missing_field(two_gaussian_config):
    data = dict(two_gaussian_config)
    del data["beta"]
    with pytest.raises(ConfigValidationError) as exc:
        DpmConfig.from_dict(data)
    assert exc.value.field == "beta"


def test_config_rejects_large_q(two_gaussian_config):
    with pytest.raises(ConfigValidationError) as exc:
        DpmConfig.from_dict({**two_gaussian_config, "q": 0.6})
    assert "0 < q < 1/2" in str(exc.value)


@pytest.mark.parametrize("field,value", [("tau_e", 0), ("tau_s", -1), ("eps_select", 0.0), ("delta", 0.0)])
def test_config_rejects_bad_values(two_gaussian_config, field, value):
    with pytest.raises(ConfigValidationError) as exc:
        DpmConfig.from_dict({**two_gaussian_config, field: value})
    assert exc.value.field == field


def test_config_dict_round_trip(two_gaussian_config):
    config = DpmConfig.from_dict(two_gaussian_config)
    assert DpmConfig.from_dict(config.to_dict()) == config
    assert config.with_overrides(tau_s=5).tau_s == 5


def test_default_sensitivity(two_gaussian_config):
    config = DpmConfig.from_dict(two_gaussian_config)
    assert config.node_sensitivity(200.0) == pytest.approx(2.0 / 200.0)
    fixed = config.with_overrides(sensitivity=0.5)
    assert fixed.node_sensitivity(200.0) == 0.5


def test_two_gaussians_are_separated(two_gaussians, two_gaussian_config):
    config = DpmConfig.from_dict(two_gaussian_config)
    result = run_dpm(two_gaussians, config, seed=0)
    assert len(result.clusters) == 2
    assert all(r == HaltReason.MIN_SIZE_VIOLATED for r in result.halt_reasons)
    centers = sorted((c.tolist() for c in result.centers), key=lambda c: c[1])
    assert np.allclose(centers[0], [0.0, 0.0], atol=0.5)
    assert np.allclose(centers[1], [0.0, 10.0], atol=0.5)
    agree = np.mean(result.assignment == two_gaussians.labels)
    assert max(agree, 1 - agree) >= 0.99


def test_budget_composition(two_gaussians, two_gaussian_config):
    """根节点 5、深度 1 并行 5、深度 2 子节点计数 1、求均值 4"""
    result = run_dpm(two_gaussians, DpmConfig.from_dict(two_gaussian_config), seed=1)
    assert result.tree.max_depth() == 1
    assert result.budget_spent.epsilon == pytest.approx(15.0)
    assert result.budget_spent.delta == pytest.approx(2e-3)


def test_same_seed_same_result(two_gaussians, two_gaussian_config):
    config = DpmConfig.from_dict(two_gaussian_config)
    first = json.dumps(run_dpm(two_gaussians, config, seed=5).to_dict(), sort_keys=True)
    second = json.dumps(run_dpm(two_gaussians, config, seed=5).to_dict(), sort_keys=True)
    threaded = run_dpm(two_gaussians, config.with_overrides(max_workers=4), seed=5).to_dict()
    threaded["metadata"]["config"]["max_workers"] = 1
    assert first == second
    assert json.dumps(threaded, sort_keys=True) == first


def test_uniform_reaches_max_depth():
    config = DpmConfig.from_dict({
        "alpha": 1.0, "t": 0.5, "q": 0.2, "beta": 0.05, "tau_e": 20, "tau_s": 4,
        "eps_select": 2.0, "eps_count": 1.0, "delta": 1e-3, "eps_avg": 1.0, "clip_bound": 1.0,
    })
    reached = 0
    for run in range(20):
        ds = generate_uniform(1, 1000, (0.0, 1.0), seed=run)
        result = run_dpm(ds, config, seed=100 + run)
        reached += result.tree.max_depth() == 4
    assert reached >= 18


def test_max_depth_zero_gives_single_cluster(uniform_1d, two_gaussian_config):
    config = DpmConfig.from_dict({**two_gaussian_config, "tau_s": 0, "beta": 0.1})
    result = run_dpm(uniform_1d, config, seed=0)
    assert len(result.clusters) == 1
    assert result.halt_reasons == [HaltReason.MAX_DEPTH]
    assert len(result.clusters[0]) == uniform_1d.n


def test_noise_free_mode_is_recorded(uniform_1d, two_gaussian_config):
    config = DpmConfig.from_dict({**two_gaussian_config, "count_noise": False, "tau_e": 50, "beta": 0.1})
    result = run_dpm(uniform_1d, config, seed=0)
    assert result.metadata["noise_mode"].startswith("noise-free")


def test_dp_average_noise_scale():
    rng = make_rng(3)
    draws = np.array([dp_average(np.zeros((100, 1)), 1.0, 1.0, rng)[0] for _ in range(2000)])
    # Laplace(0.02) 方差为 8e-4
    assert abs(draws.mean()) < 3e-3
    assert draws.var() == pytest.approx(8e-4, rel=0.2)


def test_dp_average_clips():
    center = dp_average(np.full((1000, 2), 100.0), 1.0, 10.0, make_rng(0))
    assert np.allclose(center, [1.0, 1.0], atol=0.05)


def test_node_selection_pmf_is_distribution(two_gaussians, two_gaussian_config):
    config = DpmConfig.from_dict(two_gaussian_config)
    candidates = generate_candidates(two_gaussians.bounds, 1.0)
    pmf, scored, n_used, floored = node_selection_pmf(sorted_projections(two_gaussians.points), candidates, 0.2, config)
    assert pmf.sum() == pytest.approx(1.0)
    assert n_used == 1.0 and floored
    assert len(scored.scores) == len(candidates)


def test_replay_from_saved_tree(tmp_path, two_gaussians, two_gaussian_config):
    result = run_dpm(two_gaussians, DpmConfig.from_dict(two_gaussian_config), seed=2)
    path = tmp_path / "result.json"
    save_result(result, path)
    replayed = replay(load_tree(path), two_gaussians)
    assert [c.tolist() for c in replayed.clusters] == [c.tolist() for c in result.clusters]
    assert np.allclose(np.vstack(replayed.centers), np.vstack(result.centers))


def test_replay_dimension_mismatch(uniform_1d, two_gaussians, two_gaussian_config):
    result = run_dpm(two_gaussians, DpmConfig.from_dict(two_gaussian_config), seed=2)
    with pytest.raises(ValueError):
        replay(result.tree, uniform_1d)


@pytest.mark.parametrize("count_noise", [False, True])
def test_small_dataset_halts_at_root(uniform_1d, two_gaussian_config, count_noise):
    """n < 2τ_e 时任何划分都有一侧不足 τ_e"""
    small = Dataset(uniform_1d.points[:30], uniform_1d.bounds)
    config = DpmConfig.from_dict({**two_gaussian_config, "tau_e": 20, "beta": 0.1, "eps_count": 10.0,
                                  "count_noise": count_noise})
    result = run_dpm(small, config, seed=4)
    assert result.tree.is_leaf
    assert result.halt_reasons == [HaltReason.MIN_SIZE_VIOLATED]
    assert result.clusters[0].tolist() == list(range(30))


def test_replay_on_permuted_rows(two_gaussians, two_gaussian_config):
    result = run_dpm(two_gaussians, DpmConfig.from_dict(two_gaussian_config), seed=6)
    perm = np.random.default_rng(1).permutation(two_gaussians.n)
    shuffled = Dataset(two_gaussians.points[perm], two_gaussians.bounds)
    replayed = replay(result.tree, shuffled)
    original = {frozenset(c.tolist()) for c in result.clusters}
    assert {frozenset(perm[c].tolist()) for c in replayed.clusters} == original


@pytest.mark.parametrize("dim", [1, 3])
def test_dp_average_single_point_is_centred(dim):
    rng = make_rng(11)
    draws = np.array([dp_average(np.zeros((1, dim)), 1.0, 1.0, rng) for _ in range(10_000)])
    assert np.all(np.abs(draws.mean(axis=0)) <= 0.1 * dim)


def test_generator_seed_matches_drawn_master_seed(two_gaussians, two_gaussian_config):
    config = DpmConfig.from_dict(two_gaussian_config)
    first = run_dpm(two_gaussians, config, make_rng(21))
    master = int(make_rng(21).integers(0, 2 ** 63 - 1))
    assert first.metadata["seed"] == master
    again = run_dpm(two_gaussians, config, master)
    assert json.dumps(first.to_dict(), sort_keys=True) == json.dumps(again.to_dict(), sort_keys=True)
