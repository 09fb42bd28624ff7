import numpy as np
import pytest

from dpm_toolkit.exceptions import GeometryError
from dpm_toolkit.separability import (
    Gap1D,
    ball_count,
    best_gap_1d,
    check_lemma_empty_rho,
    check_lemma_rho_empty,
    check_lemma_rhoxi,
    cross_distance,
    emptiness_xi_bridge,
    find_certificates,
    is_rho_separable,
    preimage_count,
    project,
    xi_for_rho,
    xi_symmetric,
)


def test_cross_distance_and_separability():
    X = np.array([[0.0, 0.0], [1.0, 0.0]])
    Y = np.array([[4.0, 0.0], [1.0, 3.0]])
    assert cross_distance(X, Y) == pytest.approx(3.0)
    assert is_rho_separable(X, Y, 3.0)
    assert not is_rho_separable(X, Y, 3.5)
    with pytest.raises(GeometryError):
        cross_distance(X, np.empty((0, 2)))


def test_xi_is_one_sided():
    X = np.array([0.0])
    Y = np.array([0.5, 1.0, 3.0])
    assert xi_for_rho(X, Y, 2.0) == 2
    assert xi_symmetric(X, Y, 2.0) == {"xi_xy": 2, "xi_yx": 1, "xi_max": 2}


def test_project_normalises_direction():
    S = np.array([[3.0, 4.0]])
    assert project([0.0, 2.0], S).tolist() == [4.0]
    with pytest.raises(GeometryError):
        project([0.0, 0.0], S)


def test_preimage_interval_is_open():
    assert preimage_count([1.0], (0.5, 1.5), np.array([0.5, 1.0, 1.5])) == 1


def test_ball_count_open_and_closed():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]])
    assert ball_count(pts, [0.0, 0.0], 1.0) == 2
    assert ball_count(pts, [0.0, 0.0], 1.0, closed=True) == 3


def test_gap_requires_order():
    with pytest.raises(GeometryError):
        Gap1D(1.0, 1.0)


def test_empty_preimage_gives_partition():
    D = np.array([0.0, 2.0])
    assert check_lemma_rho_empty(D, [1.0], (0.5, 1.5))
    cert = check_lemma_empty_rho(D, [1.0], (0.5, 1.5))
    assert cert.partition == ([0], [1])
    assert cert.rho == pytest.approx(1.0)
    assert cert.statement_rho == pytest.approx(0.5)
    assert cert.min_cross_distance >= cert.rho
    assert cert.xi == 0


def test_non_empty_preimage_rejected():
    with pytest.raises(GeometryError):
        check_lemma_empty_rho(np.array([0.0, 0.9, 2.0]), [1.0], (0.5, 1.5))


def test_rhoxi_counts_points_in_gap():
    S = np.array([0.0, 0.9, 2.0])
    xi, cert = check_lemma_rhoxi(S, [1.0], (0.5, 1.5))
    assert xi == 1
    assert cert.inside == [1]
    assert cert.separator.tolist() == pytest.approx([1.0])
    assert cert.recount(S) <= xi


def test_best_gap_prefers_empty_window_near_median():
    values = np.array([0.0, 0.0, 0.0, 10.0, 10.0, 10.0])
    gap = best_gap_1d(values, 2.0)
    assert gap.xi_inside == 0
    assert gap.centre == pytest.approx(5.0)
    cert = check_lemma_empty_rho(values, [1.0], gap)
    assert cert.partition == ([0, 1, 2], [3, 4, 5])
    assert cert.recount(values) == 0


def test_best_gap_wider_than_range(caplog):
    gap = best_gap_1d(np.array([1.0, 2.0]), 5.0)
    assert gap.centre == pytest.approx(1.5)
    assert gap.xi_inside == 2
    assert "大于投影范围" in caplog.text


def test_emptiness_bridge():
    assert emptiness_xi_bridge(5, 100.0) == pytest.approx(0.95)
    with pytest.raises(ValueError):
        emptiness_xi_bridge(1, 0.0)


def test_certificates_on_random_data():
    """每个证书都能被独立重算验证"""
    gen = np.random.default_rng(2)
    points = np.vstack([gen.normal(0, 1, size=(60, 2)), gen.normal(6, 1, size=(60, 2))])
    certs = find_certificates(points, 1.5, directions=[[1.0, 1.0]])
    assert len(certs) == 3
    for cert in certs:
        assert cert.recount(points) <= cert.xi
        assert cert.min_cross_distance >= cert.rho - 1e-9
        left, right = cert.partition
        assert len(left) + len(right) + cert.xi == len(points)
    assert min(c.xi for c in certs) <= 5
    assert certs[2].to_dict()["direction"] == pytest.approx([2 ** -0.5, 2 ** -0.5])


def _window_scan_minimum(values, rho):
    """逐个断点及相邻断点中点处计数开窗口内的点，取最小值"""
    values = np.sort(values)
    low, last = values[0], values[-1] - rho
    breaks = np.unique(np.concatenate([values, values - rho, [low, last]]))
    breaks = breaks[(breaks >= low) & (breaks <= last)]
    starts = np.concatenate([breaks, (breaks[:-1] + breaks[1:]) / 2.0])
    return min(int(np.sum((values > s) & (values < s + rho))) for s in starts)


def test_projection_is_a_contraction():
    gen = np.random.default_rng(5)
    for _ in range(1000):
        dim = int(gen.integers(1, 4))
        x, y = gen.normal(0, 10, size=(2, dim))
        v = gen.normal(size=dim)
        gap = abs(project(v, x[None, :])[0] - project(v, y[None, :])[0])
        assert gap <= np.linalg.norm(x - y) + 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_xi_for_rho_is_monotone(seed):
    gen = np.random.default_rng(seed)
    X = gen.normal(0, 1, size=(8, 2))
    Y = gen.normal(1, 1, size=(10, 2))
    xis = [xi_for_rho(X, Y, rho) for rho in np.linspace(0.05, 8.0, 40)]
    assert all(a <= b for a, b in zip(xis, xis[1:]))
    assert xis[-1] <= len(Y)


@pytest.mark.parametrize("seed", range(10))
def test_best_gap_matches_window_scan(seed):
    gen = np.random.default_rng(seed)
    n = int(gen.integers(5, 201))
    values = np.round(gen.normal(0, 3, size=n), 1)
    if np.ptp(values) == 0:
        values[0] += 1.0
    rho = float(gen.uniform(0.05, 0.9) * np.ptp(values))
    gap = best_gap_1d(values, rho)
    assert gap.width == pytest.approx(rho)
    assert gap.xi_inside == int(np.sum((values > gap.a) & (values < gap.b)))
    assert gap.xi_inside == _window_scan_minimum(values, rho)


def _random_instance(gen):
    n, dim = int(gen.integers(2, 13)), int(gen.integers(1, 4))
    points = gen.uniform(-5, 5, size=(n, dim))
    v = gen.normal(size=dim)
    proj = project(v, points)
    return points, v, proj


def _assert_cross_pairs(points, cert):
    left, right = cert.partition
    if left and right:
        distances = np.linalg.norm(points[left][:, None, :] - points[right][None, :, :], axis=2)
        assert distances.min() >= cert.rho - 1e-9
    assert cert.recount(points) <= cert.xi


def test_rho_empty_holds_on_random_instances():
    gen = np.random.default_rng(11)
    for _ in range(1000):
        points, v, proj = _random_instance(gen)
        a = float(gen.uniform(proj.min() - 1, proj.max() + 1))
        assert check_lemma_rho_empty(points, v, (a, a + float(gen.uniform(0.01, 3.0))))


def test_empty_rho_holds_on_random_instances():
    gen = np.random.default_rng(12)
    checked = 0
    for _ in range(1000):
        points, v, proj = _random_instance(gen)
        ordered = np.sort(proj)
        widths = np.diff(ordered)
        if widths.size == 0 or widths.max() <= 1e-6:
            continue
        k = int(np.argmax(widths))
        gap = (float(ordered[k]), float(ordered[k + 1]))
        cert = check_lemma_empty_rho(points, v, gap)
        assert cert.xi == 0
        _assert_cross_pairs(points, cert)
        checked += 1
    assert checked > 900


def test_rhoxi_holds_on_random_instances():
    gen = np.random.default_rng(13)
    for _ in range(1000):
        points, v, proj = _random_instance(gen)
        a = float(gen.uniform(proj.min() - 1, proj.max()))
        b = a + float(gen.uniform(0.01, 4.0))
        xi, cert = check_lemma_rhoxi(points, v, (a, b))
        assert xi == int(np.sum((proj > a) & (proj < b)))
        _assert_cross_pairs(points, cert)
