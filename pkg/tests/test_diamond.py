import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import diamond_points
from thinmetric.diamond import (
    StepFunction,
    branch_signs,
    disjoint_support_violations,
    function,
    generate_thin_diamond,
    verify_diamond_conditions,
)


def sorted_rows(x):
    return np.array(sorted(map(tuple, np.round(x, 12))))


def test_k1_p2_distances():
    c, _ = generate_thin_diamond(1, 2, 0.1, 2)
    assert c.distance("L0:s", "L0:t") == pytest.approx(2.0, rel=1e-15)
    m = [a for a in c.addresses if a.role != "s" and a.role != "t"]
    assert c.distance("L0:s", m[0]) == pytest.approx(math.sqrt(1.04), rel=1e-14)
    assert c.distance(m[0], m[1]) == pytest.approx(2**0.5 * 0.1 * 2, rel=1e-14)
    assert c.distance(m[0], m[1]) == pytest.approx(0.28284271247461906, rel=1e-14)


@pytest.mark.parametrize("b", [2, 3, 5])
def test_p1_midpoint_separation(b):
    c, idx = generate_thin_diamond(1, 1, 0.1, b)
    rows = idx.copies(1)[0]
    d_st = c.distance(c.addresses[rows[0]], c.addresses[rows[-1]])
    for i in range(1, b + 1):
        for j in range(i + 1, b + 1):
            d = c.pair_distances(np.array([rows[i]]), np.array([rows[j]]))[0]
            assert d == pytest.approx(0.1 * d_st, rel=1e-14)


@pytest.mark.parametrize("k,p,b", [(1, 2, 2), (2, 1.5, 3), (2, 3, 4), (3, 1, 2)])
def test_matches_cellwise_oracle(k, p, b):
    c, _ = generate_thin_diamond(k, p, 0.1, b)
    ref, mesh = diamond_points(k, p, 0.1, b)
    assert c.weight == mesh
    assert np.allclose(sorted_rows(c.coords), sorted_rows(ref), atol=1e-12, rtol=0)


def test_generated_passes():
    for k, p, b in [(2, 1, 6), (3, 1.5, 4), (4, 3, 2)]:
        c, idx = generate_thin_diamond(k, p, 0.05, b)
        assert verify_diamond_conditions(c, idx, 1e-9).passed


def test_point_count_and_levels():
    b, k = 3, 3
    c, idx = generate_thin_diamond(k, 2, 0.1, b)
    assert len(c) == 2 + b * sum((2 * b) ** l for l in range(k))
    assert idx.n_copies() == {j: (2 * b) ** (k - j) for j in range(1, k + 1)}
    assert idx.roles == ("s", "m1", "m2", "m3", "t")


def test_fault_injection_names_condition():
    c, idx = generate_thin_diamond(2, 2, 0.1, 3)
    x = c.coords.copy()
    r = idx.copies(1)[5, 2]
    x[r] *= 1.0 + 1e-6
    rep = verify_diamond_conditions(c.with_coords(x), idx)
    bad = {f.name for f in rep.failures()}
    assert "d1" in bad or "d2" in bad
    assert all(f.level == 1 and f.copy == 5 for f in rep.failures())


def test_b2_copy_is_thin_two_branching():
    c, idx = generate_thin_diamond(2, 1.5, 0.1, 2)
    assert idx.roles == ("s", "m1", "m2", "t")
    assert verify_diamond_conditions(c, idx).passed


def test_disjoint_supports():
    c, idx = generate_thin_diamond(3, 2, 0.1, 3)
    assert disjoint_support_violations(c, idx) == 0
    x = c.coords.copy()
    x[idx.copies(1)[0, 1], 0] += 1.0
    assert disjoint_support_violations(c.with_coords(x), idx) > 0


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_midpoint_cancellation_identity(p):
    eps = 0.07
    c, idx = generate_thin_diamond(2, p, eps, 4)
    for j, rows in idx.levels.items():
        st_ = c.pair_distances(rows[:, 0], rows[:, -1])
        for a in range(1, 5):
            for b in range(a + 1, 5):
                lhs = c.pair_distances(rows[:, a], rows[:, b]) ** p
                assert np.allclose(lhs, 2 ** (p - 1) * eps**p * st_**p, rtol=1e-12)


def test_branch_signs_balanced():
    for J in range(1, 7):
        for i in range(1, J + 1):
            s = branch_signs(i, J)
            assert s.sum() == 0 and set(np.unique(s)) == {-1.0, 1.0}


@pytest.mark.parametrize("extra", [1, 2, 3])
def test_grid_exactness(extra):
    c, _ = generate_thin_diamond(2, 1.5, 0.1, 3)
    c2, _ = generate_thin_diamond(2, 1.5, 0.1, 3, refine=extra)
    i, j = np.triu_indices(len(c), 1)
    assert np.allclose(c2.pair_distances(i, j), c.pair_distances(i, j), rtol=1e-12, atol=0)
    f = function(c, c.addresses[3])
    assert f.refine(extra).norm() == pytest.approx(f.norm(), rel=1e-12)


def test_step_function_basics():
    f = StepFunction(np.array([1.0, -1.0, 0.0, 0.0]), 2, 2.0)
    assert f.mesh == 0.25 and f.length == 1.0
    assert f.norm() == pytest.approx(math.sqrt(0.5))
    assert f.support() == (0.0, 0.5)
    assert (f - f).support() is None


def test_bad_parameters():
    with pytest.raises(ValueError):
        generate_thin_diamond(2, 2, 0.1, 1)
    with pytest.raises(ValueError):
        generate_thin_diamond(2, math.inf, 0.1, 2)
    with pytest.raises(ValueError):
        generate_thin_diamond(2, 2, 0.0, 2)
    with pytest.raises(ValueError):
        generate_thin_diamond(2, 2, 0.9, 2)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.sampled_from([1.0, 1.5, 2.0, 3.0]), st.integers(2, 5), st.floats(0.005, 0.3))
def test_conditions_hold(k, p, b, eps):
    c, idx = generate_thin_diamond(k, p, eps, b)
    assert verify_diamond_conditions(c, idx).passed
