"""Thin Laakso substructures in l_q^(k+1).

Level 1 is ``s=-e1, t=e1, a=-e1/2, b=e1/2, m1/m2 = +-eps*e2``.  Each later
step replaces every edge ``{s', t'}`` by a Laakso pattern::

    a  = 3/4 s' + 1/4 t'          b  = 1/4 s' + 3/4 t'
    m1 = (s'+t')/2 + eps/2 |s'-t'|_q e_(j+1)
    m2 = (s'+t')/2 - eps/2 |s'-t'|_q e_(j+1)

where all midpoints created at step ``j`` share coordinate ``j+1``.
"""

from __future__ import annotations

import math

import numpy as np

from .checks import ConditionChecker, VerificationReport, root_sum
from .cloud import PointCloud, SubstructureIndex
from .graph import copy_rows, expand_levels, laakso_base, pattern_roles, power
from .norms import lp_norm, parse_exponent

MAX_K = 8

CONDITIONS = ("c1", "c2", "c3", "c4", "c5")


def check_epsilon(epsilon: float, q: float) -> None:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if root_sum(epsilon, q) > 2.0:
        raise ValueError(f"epsilon={epsilon} violates (1+eps^q)^(1/q) <= 2 for q={q}")


def generate_thin_laakso(k: int, q, epsilon: float, max_k: int = MAX_K) -> tuple[PointCloud, SubstructureIndex]:
    """Build the (epsilon, q)-thin k-Laakso point set and its copy index."""
    q = parse_exponent(q)
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if k > max_k:
        raise ValueError(f"k={k} exceeds the point budget (6^k points, max_k={max_k})")
    check_epsilon(epsilon, q)

    base = laakso_base()
    n_points = 2 + 4 * (6**k - 1) // 5
    x = np.zeros((n_points, k + 1))
    x[0, 0], x[1, 0] = -1.0, 1.0
    roles = [w.role for w in base.interior]
    for lvl in expand_levels(base, k):
        s, t = x[lvl.parent_src], x[lvl.parent_dst]
        mid = 0.5 * (s + t)
        lift = 0.5 * epsilon * lp_norm(s - t, q)
        coord = {
            "a": 0.75 * s + 0.25 * t,
            "b": 0.25 * s + 0.75 * t,
            "m1": mid.copy(),
            "m2": mid.copy(),
        }
        coord["m1"][:, lvl.step] += lift
        coord["m2"][:, lvl.step] -= lift
        for r, role in enumerate(roles):
            x[lvl.new_rows[:, r]] = coord[role]

    g = power(base, k)
    cloud = PointCloud(g.vertices, x, q, "laakso", {"k": k, "epsilon": float(epsilon)})
    index = SubstructureIndex(pattern_roles(base), copy_rows(base, k), k, len(base.edges))
    return cloud, index


def verify_conditions(cloud: PointCloud, index: SubstructureIndex, rel_tol: float = 1e-9) -> VerificationReport:
    """Check (c1)-(c5) on every copy at every level, relative to the copy's ``d(s,t)``.

    A sixth entry ``nondegenerate`` asserts ``d(m1, m2) > 0`` so that
    ``eps = 0`` clouds are not accepted.
    """
    if index.roles != pattern_roles(laakso_base()):
        raise ValueError("index is not a Laakso index")
    eps = cloud.epsilon
    q = cloud.norm
    chk = ConditionChecker(cloud, index, rel_tol, CONDITIONS + ("nondegenerate",))
    f3 = 0.25 * root_sum(2 * eps, q)
    f4 = 0.5 * root_sum(eps, q)
    for j, rows in sorted(index.levels.items()):
        st = chk.d(rows, "s", "t")
        quarter = 0.25 * st
        chk.require_positive("c1", j, quarter, np.ones_like(st))
        for obs in (chk.d(rows, "s", "a"), chk.d(rows, "b", "t"), 0.5 * chk.d(rows, "a", "b")):
            chk.check("c1", j, obs, quarter, st)
        for u, v in (("s", "b"), ("a", "t")):
            chk.check("c2", j, chk.d(rows, u, v), 0.75 * st, st)
        for m in ("m1", "m2"):
            for u in ("a", "b"):
                chk.check("c3", j, chk.d(rows, m, u), f3 * st, st)
            for u in ("s", "t"):
                chk.check("c4", j, chk.d(rows, u, m), f4 * st, st)
        m12 = chk.d(rows, "m1", "m2")
        chk.check("c5", j, m12, eps * st, st)
        chk.require_positive("nondegenerate", j, m12, st)
    return chk.report


def designated_pairs(index: SubstructureIndex, j: int) -> np.ndarray:
    """Row pairs ``{s,m1},{s,m2},{m1,t},{m2,t}`` of every level-``j`` copy, shape ``(4 n, 2)``."""
    rows = index.copies(j)
    c = index.col
    pairs = [(c("s"), c("m1")), (c("s"), c("m2")), (c("m1"), c("t")), (c("m2"), c("t"))]
    return np.stack([rows[:, list(p)] for p in pairs], axis=1).reshape(-1, 2)


def n_points(k: int) -> int:
    return 2 + 4 * (6**k - 1) // 5


def top_distance(cloud: PointCloud) -> float:
    return cloud.distance("L0:s", "L0:t")


def max_epsilon(q: float) -> float:
    """Largest epsilon with ``(1+eps^q)^(1/q) <= 2``."""
    q = parse_exponent(q)
    return 2.0 if math.isinf(q) else (2.0**q - 1.0) ** (1.0 / q)
