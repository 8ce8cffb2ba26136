import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from oracles import brute_min_cover, doubling_brute, four_point_direct
from thinmetric.diamond import generate_thin_diamond
from thinmetric.laakso import generate_thin_laakso
from thinmetric.metric import (
    FiniteMetric,
    Sampling,
    doubling_constant,
    exact_min_cover,
    four_point_check,
    four_point_modulus,
    four_point_ratio,
    four_point_ratio_points,
    greedy_cover,
    mid_set,
    rounded_ball_scan,
    separated_subset,
)


def line(n):
    return FiniteMetric.from_points(np.arange(n, dtype=float), p=1)


def grid_linf():
    pts = np.array(list(itertools.product([-1, 0, 1], repeat=2)), dtype=float)
    return FiniteMetric.from_points(pts, p=math.inf), pts


def random_metric(draw_seed, n, p=2.0, dim=3):
    pts = np.random.default_rng(draw_seed).standard_normal((n, dim))
    return FiniteMetric.from_points(pts, p=p)


def graph_metric_random(seed, n, prob):
    g = nx.connected_watts_strogatz_graph(n, 4, prob, seed=seed)
    rng = np.random.default_rng(seed)
    for u, v in g.edges:
        g[u][v]["weight"] = float(rng.uniform(0.5, 2.0))
    d = np.array(nx.floyd_warshall_numpy(g, weight="weight"))
    return FiniteMetric(list(range(n)), d)


# ----------------------------------------------------------------------------
# finite metric


def test_matrix_validation():
    with pytest.raises(ValueError):
        FiniteMetric([0, 1], np.array([[0, 1], [2, 0]]))
    with pytest.raises(ValueError):
        FiniteMetric([0, 1], np.array([[0, 0], [0, 0]]))
    with pytest.raises(ValueError):
        FiniteMetric([0, 1])


def test_lazy_rows_match_matrix():
    c, _ = generate_thin_laakso(2, 3, 0.1)
    m = FiniteMetric.from_cloud(c)
    r5 = m.row(5).copy()
    assert m.d(3, 7) == pytest.approx(c.distance(c.addresses[3], c.addresses[7]))
    assert np.allclose(m.matrix[5], r5)
    assert m.check_triangle()


# ----------------------------------------------------------------------------
# doubling


def test_single_point():
    est = doubling_constant(FiniteMetric([0], np.zeros((1, 1))))
    assert est.upper == est.lower == 1


def test_three_collinear_points():
    # B(1, 1) holds all three points and no half-radius ball centred in the space covers two ends
    m = line(3)
    exact = doubling_brute(m.matrix.tolist())
    assert exact == 3
    assert exact_min_cover(m, 1, 1.0) == 3
    est = doubling_constant(m)
    assert est.lower <= exact <= est.upper
    assert est.upper == 3


def test_greedy_centers_separated():
    c, _ = generate_thin_laakso(2, 2, 0.1)
    m = FiniteMetric.from_cloud(c)
    members = np.arange(len(m))
    cov = greedy_cover(m, members, 0.3)
    d = m.sub(np.array(cov), np.array(cov))
    assert np.all(d[np.triu_indices(len(cov), 1)] > 0.3)
    assert m.sub(np.array(cov), members).min(axis=0).max() <= 0.3 * (1 + 1e-12)
    pack = separated_subset(m, members, 0.3)
    dp = m.sub(np.array(pack), np.array(pack))
    assert np.all(dp[np.triu_indices(len(pack), 1)] > 0.3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 9))
def test_bounds_sandwich_exact(seed, n):
    m = random_metric(seed, n)
    d = m.matrix.tolist()
    est = doubling_constant(m)
    exact = doubling_brute(d)
    assert est.lower <= exact <= est.upper


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 10))
def test_greedy_at_least_exact_cover(seed, n):
    m = random_metric(seed, n, p=1.0)
    d = m.matrix
    for center in range(n):
        for r in np.unique(d[center][d[center] > 0]):
            members = np.flatnonzero(d[center] <= r * (1 + 1e-12))
            g = len(greedy_cover(m, members, r / 2, first=center))
            ex = exact_min_cover(m, center, r)
            assert g >= ex == brute_min_cover(d.tolist(), members.tolist(), r / 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(5, 12))
def test_deletion_outside_witness_ball(seed, n):
    m = random_metric(seed, n)
    est = doubling_constant(m)
    x, r = est.witness_ball
    inside = set(np.flatnonzero(m.row(x) <= r * (1 + 1e-12)).tolist())
    outside = [i for i in range(n) if i not in inside]
    assume(outside)
    i = outside[0]
    m2 = m.delete(i)
    x2 = x - (x > i)
    members = np.flatnonzero(m2.row(x2) <= r * (1 + 1e-12))
    assert len(greedy_cover(m2, members, r / 2, first=x2)) == est.upper
    assert doubling_constant(m2).upper >= est.upper


def test_sampling_is_seeded():
    c, _ = generate_thin_laakso(3, 3, 0.1)
    m = FiniteMetric.from_cloud(c)
    a = doubling_constant(m, Sampling(20, 10, 7))
    b = doubling_constant(m, Sampling(20, 10, 7))
    assert (a.upper, a.lower, a.witness_ball) == (b.upper, b.lower, b.witness_ball)
    assert 1 <= a.lower <= a.upper


def test_exact_cover_size_limit():
    with pytest.raises(ValueError):
        exact_min_cover(line(13), 0, 1.0)


# ----------------------------------------------------------------------------
# midpoint sets


def test_midset_on_line():
    m = FiniteMetric.from_points(np.array([-1.0, 0.0, 1.0]), p=1)
    ms = mid_set(m, 0, 2, 0.0)
    assert ms.members == [1] and ms.diameter == 0.0


def test_midset_linf_grid():
    m, pts = grid_linf()
    x = int(np.flatnonzero((pts == [-1, 0]).all(axis=1))[0])
    y = int(np.flatnonzero((pts == [1, 0]).all(axis=1))[0])
    ms = mid_set(m, x, y, 0.0)
    assert {tuple(pts[i]) for i in ms.members} == {(0, -1), (0, 0), (0, 1)}
    assert ms.diameter == 2.0


def test_midset_rejects_equal_points():
    with pytest.raises(ValueError):
        mid_set(line(3), 1, 1, 0.1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 1), st.floats(0, 1), st.sampled_from([1.0, 2.0, math.inf]))
def test_midset_monotone_and_bounded(seed, e1, e2, p):
    m = random_metric(seed, 25, p=p, dim=2)
    lo, hi = sorted((e1, e2))
    a, b = mid_set(m, 0, 1, lo), mid_set(m, 0, 1, hi)
    assert set(a.members) <= set(b.members)
    assert b.diameter <= (1 + hi) * m.d(0, 1) * (1 + 1e-12)


# ----------------------------------------------------------------------------
# rounded balls


def test_scan_on_line_is_large():
    m = line(6)
    scan = rounded_ball_scan(m, 0.5, [0.0, 0.01, 0.05, 0.1])
    assert scan.max_ratio == [0.0] * 4
    assert scan.eta == 0.1


def test_scan_linf_grid_has_no_modulus():
    m, _ = grid_linf()
    scan = rounded_ball_scan(m, 1.0, [0.0, 0.1, 0.5])
    assert all(r >= 1.0 for r in scan.max_ratio)
    assert scan.eta == 0.0


def test_scan_diamond_consistent_with_four_point_modulus():
    c, _ = generate_thin_diamond(2, 2, 0.1, 3)
    m = FiniteMetric.from_cloud(c)
    t = 0.8
    grid = [0.0, 0.05, 0.1, 0.2, t * t / 3 * 0.999]
    scan = rounded_ball_scan(m, t, grid)
    assert all(r < t for e, r in zip(scan.etas, scan.max_ratio) if e < four_point_modulus(2) * t**2)
    assert scan.eta >= max(e for e in grid if e < t * t / 3)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 1.0))
def test_l2_samples_respect_four_point_modulus(seed, t):
    m = random_metric(seed, 20, p=2.0, dim=3)
    eta = 0.999 * t * t / 3
    scan = rounded_ball_scan(m, t, [eta])
    assert scan.max_ratio[0] < t


def test_scan_rejects_bad_t():
    with pytest.raises(ValueError):
        rounded_ball_scan(line(3), 0.0, [0.1])


# ----------------------------------------------------------------------------
# four-point inequality


def test_linf_quadruple_flagged():
    x = [(0, 0), (1, 1), (2, 0), (1, -1)]
    r = four_point_ratio_points(*[np.array(v, float) for v in x], p=2, C=4, norm=math.inf)
    assert float(r) == pytest.approx(2.0, abs=1e-12)
    assert four_point_direct(*x, p=2, C=4, q=math.inf) == 2.0
    m = FiniteMetric.from_points(np.array(x, float), p=math.inf)
    res = four_point_check(m, 2, 4)
    assert res.violated and res.max_ratio == pytest.approx(2.0, abs=1e-12)
    assert res.witnesses[0][1] == pytest.approx(2.0)


def test_degenerate_quadruple():
    assert four_point_ratio(0, 0, 0, 0, 0, 0, 2, 4) == 0.0


def test_l2_never_violated():
    pts = np.random.default_rng(3).standard_normal((4, 20000, 8))
    r = four_point_ratio_points(*pts, p=2, C=4)
    assert r.max() <= 1.0 + 1e-12
    i = 17
    assert r[i] == pytest.approx(four_point_direct(*(pts[k, i] for k in range(4)), p=2, C=4))


def test_check_preconditions():
    with pytest.raises(ValueError):
        four_point_check(line(3), 2, 4)
    with pytest.raises(ValueError):
        four_point_check(line(5), 2, 5)
    with pytest.raises(ValueError):
        four_point_check(line(5), 0, 1)


def test_coincident_pairs_exceed_two_to_the_p():
    # x1 = x2 and x3 = x4 gives ratio 2 when C = 2^p at p = 1, so C = 2^p is not universal
    r = four_point_ratio(1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 2.0)
    assert r == 2.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(6, 14), st.floats(1.0, 4.0))
def test_shortest_path_metrics_obey_doubled_constant(seed, n, p):
    m = graph_metric_random(seed, n, 0.3)
    d = m.matrix
    q = np.random.default_rng(seed).integers(0, n, size=(3000, 4))
    i1, i2, i3, i4 = q.T
    r = four_point_ratio(d[i1, i3], d[i2, i4], d[i1, i2], d[i2, i3], d[i3, i4], d[i4, i1], p, 2.0 ** (p + 1))
    assert r.max() <= 1.0 + 1e-12


def test_four_point_modulus_value():
    assert four_point_modulus(2) == pytest.approx(1 / 3)
