import itertools
import logging
import math

import numpy as np
import pytest

from dpm_toolkit.dpm_engine import DpmConfig
from dpm_toolkit.exceptions import BoundDomainError, ConfigValidationError, NoAdmissibleSplitError
from dpm_toolkit.halting_analysis import (
    PUBLISHED_EMPTINESS_TABLE,
    PUBLISHED_Z_TABLE,
    BoundScenario,
    central_emptiness,
    centreness_threshold,
    evolution_factor,
    gaussian_halt_threshold,
    gaussian_limitation_table,
    gaussian_median_shift,
    measure_scenario,
    normal_cdf,
    normal_quantile,
    prob_central_split_lower,
    prob_halt_immediately_lower,
    prob_halt_within,
    prob_not_halt_lower,
    reproduce_fig4,
    threshold_evolution,
    tprime_evolution,
    uniform_fails_to_halt,
)

GOLDEN = dict(
    n_tilde=100.0, tau_e=10, t=0.5, q=0.2, alpha=1.0, eps=1.0, delta_f=0.05,
    e_min=0.5, e_qi=0.2, t_tau=0.1,
    counts={"W_below_ttau": 2, "W_mid": 5, "W_above": 3},
)


@pytest.fixture
def golden():
    return BoundScenario(**GOLDEN)


def test_normal_quantile_known_values():
    assert normal_quantile(0.975) == pytest.approx(1.959963985, abs=1e-8)
    assert normal_quantile(0.5) == pytest.approx(0.0, abs=1e-12)
    assert isinstance(normal_quantile(0.9), float)


def test_normal_quantile_inverts_cdf():
    p = np.array([1e-6, 0.01, 0.02425, 0.3, 0.7, 0.97575, 0.999])
    assert np.allclose(normal_cdf(normal_quantile(p)), p, rtol=1e-9, atol=1e-14)
    assert normal_quantile(0.2) == pytest.approx(-normal_quantile(0.8))


def test_centreness_threshold_examples():
    assert centreness_threshold(10, 100, 0.4, 0.2) == pytest.approx(0.2)
    assert centreness_threshold(50, 100, 0.6, 0.2) == pytest.approx(1.0)
    with pytest.raises(NoAdmissibleSplitError):
        centreness_threshold(60, 100, 0.5, 0.2)


def test_uniform_fails_to_halt():
    assert uniform_fails_to_halt(1000, 20, 4)
    assert not uniform_fails_to_halt(1000, 100, 4)


def test_halt_immediately_golden(golden):
    expected = 2 * math.exp(5) / (2 * math.exp(11) + 3 * math.exp(12) + 5 * math.exp(15))
    assert prob_halt_immediately_lower(golden) == pytest.approx(expected, rel=1e-12)


def test_halt_immediately_zero_below():
    s = BoundScenario(**{**GOLDEN, "counts": {"W_below_ttau": 0, "W_mid": 5, "W_above": 3}})
    assert prob_halt_immediately_lower(s) == 0.0


def test_halt_immediately_all_zero_counts():
    s = BoundScenario(**{**GOLDEN, "counts": {"W_below_ttau": 0, "W_mid": 0, "W_above": 0}})
    with pytest.raises(BoundDomainError):
        prob_halt_immediately_lower(s)


def test_equal_exponents_reduce_to_count_ratios():
    s = BoundScenario(**{**GOLDEN, "alpha": 0.5, "t": 0.5, "t_tau": 0.5, "e_min": 1.0, "e_qi": 0.0})
    assert prob_halt_immediately_lower(s) == pytest.approx(0.2)
    assert prob_central_split_lower(s, t_prime=0.5, strict=False) == pytest.approx(0.1)


def test_central_split_golden(golden):
    denom = 2 * math.exp(11) + 3 * math.exp(12) + 5 * math.exp(13)
    assert prob_central_split_lower(golden, t_prime=0.3) == pytest.approx(math.exp(6) / denom, rel=1e-12)
    assert prob_central_split_lower(golden, t_prime=0.3, numerator="proof") == pytest.approx(
        math.exp(8) / denom, rel=1e-12)


def test_central_split_requires_ordered_tprime(golden):
    with pytest.raises(BoundDomainError):
        prob_central_split_lower(golden, t_prime=0.7)


def test_not_halt_golden(golden):
    expected = 1 - 2 * math.exp(11) / (2 * math.exp(5) + 5 * math.exp(6) + 3 * math.exp(10))
    assert prob_not_halt_lower(golden) == pytest.approx(expected, rel=1e-12)


def test_not_halt_without_violating_candidates():
    s = BoundScenario(**{**GOLDEN, "counts": {"W_below_ttau": 0, "W_mid": 5, "W_above": 3}})
    assert prob_not_halt_lower(s) == 1.0


def test_threshold_evolution_general():
    assert threshold_evolution(0.2, 0, mode="general", n_tilde=100, tau_e=10) == pytest.approx(0.2)
    assert threshold_evolution(0.2, 1, mode="general", n_tilde=100, tau_e=10) == pytest.approx(0.2222222)


def test_evolution_factor_undefined_branch():
    with pytest.raises(BoundDomainError):
        evolution_factor(0.9, 0.3, 0.45)


def test_tprime_evolution_level_zero():
    assert tprime_evolution(0.3, 0, 0.5, 0.2) == pytest.approx(0.3)


def test_halt_within_level_zero_is_immediate_bound(golden):
    report = prob_halt_within(golden, 0)
    assert report.raw == pytest.approx(prob_halt_immediately_lower(golden))
    assert len(report.rows) == 1


def test_halt_within_sums_levels():
    s = BoundScenario(**{**GOLDEN, "counts": {"W_below_ttau": 2, "W_mid": 0, "W_above": 30},
                         "e_min": 0.9, "e_qi": 0.1})
    report = prob_halt_within(s, 2)
    assert report.raw == pytest.approx(sum(r["term"] for r in report.rows))
    assert 0.0 <= report.clamped <= 1.0
    assert [r["level"] for r in report.rows] == [0, 1, 2]


def test_halt_within_tprime_mode_needs_tprime(golden):
    with pytest.raises(BoundDomainError):
        prob_halt_within(golden, 1, mode="tprime")


def test_scenario_rejects_unknown_count_key():
    with pytest.raises(ConfigValidationError):
        BoundScenario(**{**GOLDEN, "counts": {"W_below_ttau": 1, "W_mid": 1, "W_top": 1}})


def test_measure_scenario(two_gaussians, two_gaussian_config):
    config = DpmConfig.from_dict(two_gaussian_config)
    scenario = measure_scenario(two_gaussians, config)
    assert scenario.total_candidates == len(scenario.centreness_values)
    assert scenario.e_min <= scenario.e_qi <= 1.0
    assert 0.0 <= prob_halt_immediately_lower(scenario) <= 1.0


def test_measure_scenario_warns_for_small_alpha(two_gaussians, two_gaussian_config, caplog):
    config = DpmConfig.from_dict({**two_gaussian_config, "alpha": 0.5})
    with caplog.at_level(logging.WARNING):
        measure_scenario(two_gaussians, config)
    assert "alpha < 1" in caplog.text


@pytest.mark.parametrize("i", range(5))
def test_median_shift_matches_table(i):
    assert gaussian_median_shift(i) == pytest.approx(PUBLISHED_Z_TABLE[i], abs=5e-3)


def test_median_shift_exact_values_beyond_rounding():
    assert gaussian_median_shift(5) == pytest.approx(2.1539, abs=1e-3)
    assert gaussian_median_shift(6) == pytest.approx(2.4175, abs=1e-3)


def test_central_emptiness_table():
    table = gaussian_limitation_table()
    assert np.allclose(table["emptiness_published_chain"], PUBLISHED_EMPTINESS_TABLE, atol=5e-3)
    assert central_emptiness(0) == pytest.approx(0.80258, abs=1e-4)
    assert central_emptiness(3, beta_over_sigma=1e-9) == pytest.approx(1.0)


def test_gaussian_halt_threshold_examples():
    assert gaussian_halt_threshold(0, 0.0, 0.0, 0.5) == pytest.approx(1.0)
    assert gaussian_halt_threshold(0, 5.0, 0.0, 0.80258) == pytest.approx(0.0129, abs=1e-4)
    assert gaussian_halt_threshold(3, 1.0, 0.0, 0.49816) == pytest.approx(0.06227, abs=1e-5)


def test_fig4_curves():
    curves = reproduce_fig4()
    assert set(curves["alpha"]) == {0.5, 1.0, 2.0, 3.0, 5.0}
    lookup = curves.set_index(["alpha", "level"])["value"]
    assert lookup[(1.0, 3)] == pytest.approx(0.06227, abs=1e-4)
    assert lookup[(5.0, 0)] <= 0.05
    for alpha in (0.5, 1.0):
        assert np.all(np.diff(curves[curves["alpha"] == alpha]["value"]) < 0)
    for alpha, group in curves.groupby("alpha"):
        assert group["value"].iloc[-1] < group["value"].iloc[0]


def _valid_tprime_grid():
    grid = []
    for t, q, t_prime in itertools.product((0.4, 0.5, 0.6, 0.8), (0.1, 0.15, 0.2), np.linspace(0.05, 0.95, 19)):
        if t < 2 * q:
            continue
        try:
            factor = evolution_factor(t_prime, t, q)
        except BoundDomainError:
            continue
        if factor.in_unit_interval:
            grid.append((float(t_prime), t, q))
    return grid


def test_tprime_evolution_is_increasing_over_grid():
    grid = _valid_tprime_grid()
    assert len(grid) > 50
    for t_prime, t, q in grid:
        values = [tprime_evolution(t_prime, level, t, q) for level in range(6)]
        assert all(a < b for a, b in zip(values, values[1:])), (t_prime, t, q)
        thresholds = [threshold_evolution(0.1, level, t_prime=t_prime, t=t, q=q, mode="tprime") for level in range(6)]
        assert all(a < b for a, b in zip(thresholds, thresholds[1:])), (t_prime, t, q)
