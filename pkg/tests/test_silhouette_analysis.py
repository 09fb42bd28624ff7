import math

import numpy as np
import pandas as pd
import pytest

from dpm_toolkit.exceptions import ConfigValidationError
from dpm_toolkit.silhouette_analysis import (
    ChangeCase,
    Clustering,
    Role,
    Side,
    calibrate_counterexample,
    classify_outsider,
    classify_split_effect,
    classify_split_member,
    counterexample_assignments,
    counterexample_experiment,
    mean_distance_matrix,
    silhouette_change,
    silhouette_score,
    silhouette_value,
    silhouette_values,
    split_point_distances,
    trend_correlations,
)


def test_silhouette_small_example():
    c = Clustering(np.array([0.0, 1.0, 10.0, 11.0]), [0, 0, 1, 1])
    values = silhouette_values(c)
    assert values[0] == pytest.approx(1 - 1 / 10.5)
    assert values[1] == pytest.approx(1 - 1 / 9.5)
    assert silhouette_value(3, c) == pytest.approx(values[3])
    assert silhouette_score(c) == pytest.approx(values.mean())


def test_singleton_cluster_scores_zero():
    c = Clustering(np.array([0.0, 1.0, 50.0]), [0, 0, 1])
    assert silhouette_values(c)[2] == 0.0


def test_single_cluster_is_undefined():
    with pytest.raises(ValueError):
        silhouette_values(Clustering(np.zeros((3, 2)), [4, 4, 4]))


def test_assignment_length_mismatch():
    with pytest.raises(ConfigValidationError):
        Clustering(np.zeros((3, 2)), [0, 1])


def test_mean_distance_excludes_self():
    labels, means = mean_distance_matrix(np.array([[0.0], [2.0], [4.0]]), ["a", "a", "b"])
    assert labels.tolist() == ["a", "b"]
    assert means[0].tolist() == [2.0, 4.0]
    assert math.isnan(means[2, 1])


def test_member_c_remains_nearest():
    r = classify_split_member(d_C=4.0, d_S0=5.0, d_S0p=2.0, d_S0pp=4.5, side=Side.PRIME)
    assert r.case is ChangeCase.C_REMAINS_NEAREST
    assert r.role is Role.IN_SPLIT_SUBSET
    assert r.before == pytest.approx(-0.2)
    assert r.after == pytest.approx(0.5)
    assert r.improved and r.lemma_condition


def test_member_other_part_nearest():
    r = classify_split_member(d_C=6.0, d_S0=3.0, d_S0p=1.0, d_S0pp=4.5, side="S0'")
    assert r.case is ChangeCase.OTHER_PART_NEAREST
    assert r.improved and r.lemma_condition
    worse = classify_split_member(d_C=6.0, d_S0=3.0, d_S0p=2.5, d_S0pp=3.0, side=Side.PRIME)
    assert worse.change == "worsened"
    assert not worse.lemma_condition


def test_member_uses_own_side():
    r = classify_split_member(d_C=4.0, d_S0=5.0, d_S0p=4.5, d_S0pp=2.0, side=Side.DOUBLE_PRIME)
    assert r.after == pytest.approx(0.5)


def test_member_needs_other_cluster():
    with pytest.raises(ValueError):
        classify_split_member(math.inf, 1.0, 1.0, 1.0, Side.PRIME)


def test_outsider_cases():
    r = classify_outsider(d_C=math.inf, d_S0=5.0, d_S0p=6.0, d_S0pp=7.0, d_own=2.0)
    assert r.case is ChangeCase.S0_NEAREST_PART_NEAREST
    assert r.role is Role.OUTSIDE
    assert r.improved and r.lemma_condition
    r = classify_outsider(d_C=5.5, d_S0=5.0, d_S0p=6.0, d_S0pp=7.0, d_own=2.0)
    assert r.case is ChangeCase.S0_NEAREST_C_NEAREST
    r = classify_outsider(d_C=4.0, d_S0=5.0, d_S0p=3.0, d_S0pp=7.0, d_own=2.0)
    assert r.case is ChangeCase.C_NEAREST_PART_CLOSER
    assert r.change == "worsened"
    r = classify_outsider(d_C=4.0, d_S0=5.0, d_S0p=4.5, d_S0pp=7.0, d_own=2.0)
    assert r.case is ChangeCase.C_REMAINS_NEAREST_OUTSIDE
    assert r.change == "unchanged"


def test_classification_agrees_with_direct_silhouette():
    """逐点 before/after 与直接计算的轮廓值一致"""
    gen = np.random.default_rng(8)
    points = np.vstack([
        gen.normal([0, 0], 1.0, size=(40, 2)),
        gen.normal([0, 4], 1.0, size=(40, 2)),
        gen.normal([8, 2], 1.0, size=(30, 2)),
        gen.normal([-7, 9], 1.0, size=(30, 2)),
    ])
    assignment = np.repeat([0, 0, 1, 2], [40, 40, 30, 30])
    new_assignment = np.repeat([3, 4, 1, 2], [40, 40, 30, 30])
    results = classify_split_effect(points, assignment, 0, new_assignment)
    before = silhouette_values(Clustering(points, assignment))
    after = silhouette_values(Clustering(points, new_assignment))
    assert len(results) == len(points)
    for r in results:
        assert abs(r.before - before[r.point_index]) < 1e-12
        assert abs(r.after - after[r.point_index]) < 1e-12
        assert r.improved == (after[r.point_index] > before[r.point_index])
    roles = {r.role for r in results[:80]}
    assert roles == {Role.IN_SPLIT_SUBSET}


def test_split_distances_validates_partition():
    points = np.arange(6, dtype=float).reshape(-1, 1)
    with pytest.raises(ValueError):
        split_point_distances(points, [0, 0, 0, 1, 1, 1], 0, [2, 2, 2, 1, 1, 1])
    with pytest.raises(ValueError):
        split_point_distances(points, [0, 0, 0, 1, 1, 1], 0, [2, 3, 1, 1, 1, 1])
    table = split_point_distances(points, [0, 0, 0, 1, 1, 1], 0, [2, 3, 3, 1, 1, 1])
    assert table["in_s0"].tolist() == [True] * 3 + [False] * 3


def test_counterexample_assignments():
    points = np.array([[0.0, 0.0], [0.0, 5.0], [-8.0, 2.5], [0.0, 2.6]])
    before, after = counterexample_assignments(points, [0, 1, 2, 0], d_split=5.0)
    assert before.tolist() == [0, 0, 1, 0]
    assert after.tolist() == [0, 2, 1, 2]


def test_silhouette_change_fields():
    row = silhouette_change(10.0, 5.0, n_per_cluster=60, seeds=(0, 1))
    assert row["seeds"] == 2
    assert row["delta_sc_mean"] == pytest.approx(row["after_mean"] - row["before_mean"])
    assert 0.0 <= row["fraction_negative"] <= 1.0


def test_too_few_points_rejected():
    with pytest.raises(ConfigValidationError):
        silhouette_change(10.0, 5.0, n_per_cluster=10)


def test_trend_signs():
    table = counterexample_experiment(n_per_cluster=100, seeds=(0, 1), max_workers=2, progress=False)
    assert len(table) == 25
    trends = trend_correlations(table)
    assert len(trends) == 10
    assert trends["sign_ok"].all()


def test_trend_skips_short_groups():
    table = pd.DataFrame({"d_C_S0": [6.0, 6.0], "d_split": [3.0, 4.0], "delta_sc_mean": [0.1, 0.2]})
    assert trend_correlations(table).empty


@pytest.mark.timeout(600)
def test_calibration_hits_target():
    result = calibrate_counterexample()
    assert result.before_mean == pytest.approx(0.72, abs=0.01)
    assert result.after_mean == pytest.approx(0.70, abs=0.03)
    assert 3.0 < result.d_c_s0 < 30.0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_silhouette_invariant_to_rigid_motion_and_order(seed):
    gen = np.random.default_rng(seed)
    points = np.vstack([gen.normal(c, 1.0, size=(15, 2)) for c in ([0, 0], [6, 0], [0, 6])])
    labels = np.repeat([0, 1, 2], 15)
    base = silhouette_values(Clustering(points, labels))

    angle = gen.uniform(0, 2 * np.pi)
    rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    moved = points @ rotation.T + gen.uniform(-100, 100, size=2)
    assert np.allclose(silhouette_values(Clustering(moved, labels)), base, rtol=0.0, atol=1e-9)

    perm = gen.permutation(len(points))
    shuffled = silhouette_values(Clustering(points[perm], labels[perm]))
    assert np.allclose(shuffled, base[perm], rtol=0.0, atol=1e-9)
