"""Thin b-branching diamond substructures in L_p[0, k+1].

Every constructed point is a step function on the dyadic grid of mesh
``2^-J`` (``J >= b``), stored as one value per cell, so L_p norms are exact
finite sums.  Level 0 is ``s = chi[0,1]``, ``t = -chi[0,1]``; step ``l``
gives each edge ``{s', t'}`` the midpoints

    m_i = (s'+t')/2 + sum_{r=1}^{2^i} (-1)^r eps |s'-t'|_p chi_{r,i,l},

with ``chi_{r,i,l}`` the indicator of ``[l + (r-1)/2^i, l + r/2^i]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .checks import ConditionChecker, VerificationReport, root_sum
from .cloud import PointCloud, SubstructureIndex
from .graph import copy_rows, expand_levels, k2b, pattern_roles, power
from .norms import lp_norm

MAX_BRANCHING = 12
MAX_FLOATS = 40_000_000


@dataclass(frozen=True)
class StepFunction:
    """Step function on ``[0, length]`` with ``2^J`` cells per unit interval."""

    values: np.ndarray
    J: int
    p: float

    @property
    def mesh(self) -> float:
        return 2.0**-self.J

    @property
    def length(self) -> float:
        return len(self.values) * self.mesh

    def norm(self) -> float:
        return float(lp_norm(self.values, self.p, weight=self.mesh))

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        return StepFunction(self.values - other.values, self.J, self.p)

    def __add__(self, other: "StepFunction") -> "StepFunction":
        return StepFunction(self.values + other.values, self.J, self.p)

    def support(self) -> tuple[float, float] | None:
        nz = np.flatnonzero(self.values)
        if len(nz) == 0:
            return None
        return nz[0] * self.mesh, (nz[-1] + 1) * self.mesh

    def refine(self, extra: int = 1) -> "StepFunction":
        return StepFunction(np.repeat(self.values, 2**extra), self.J + extra, self.p)


def branch_signs(i: int, J: int) -> np.ndarray:
    """``sum_r (-1)^r chi_{r,i}`` restricted to one unit interval, per cell."""
    r = np.arange(2**J) // 2 ** (J - i) + 1
    return np.where(r % 2 == 0, 1.0, -1.0)


def check_epsilon(epsilon: float, p: float) -> None:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if root_sum(2 * epsilon, p) > 2.0:
        raise ValueError(f"epsilon={epsilon} violates (1+(2 eps)^p)^(1/p) <= 2 for p={p}")


def generate_thin_diamond(k: int, p: float, epsilon: float, b: int, refine: int = 0) -> tuple[PointCloud, SubstructureIndex]:
    """Build the (epsilon, p)-thin b-branching k-diamond as step functions."""
    p = float(p)
    if not 1.0 <= p < math.inf:
        raise ValueError(f"p must lie in [1, inf), got {p}")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if not 2 <= b <= MAX_BRANCHING:
        raise ValueError(f"branching b must lie in [2, {MAX_BRANCHING}], got {b}")
    check_epsilon(epsilon, p)
    J = b + refine
    per_unit = 2**J
    n_cells = (k + 1) * per_unit
    n_points = 2 + b * sum((2 * b) ** l for l in range(k))
    if n_points * n_cells > MAX_FLOATS:
        raise ValueError(f"k={k}, b={b} needs {n_points} x {n_cells} cells, over the grid budget")

    mesh = 2.0**-J
    x = np.zeros((n_points, n_cells))
    x[0, :per_unit] = 1.0
    x[1, :per_unit] = -1.0
    base = k2b(b)
    signs = np.stack([branch_signs(i, J) for i in range(1, b + 1)])
    for lvl in expand_levels(base, k):
        s, t = x[lvl.parent_src], x[lvl.parent_dst]
        mid = 0.5 * (s + t)
        scale = epsilon * lp_norm(s - t, p, weight=mesh)
        cells = slice(lvl.step * per_unit, (lvl.step + 1) * per_unit)
        for i in range(b):
            m = mid.copy()
            m[:, cells] += scale[:, None] * signs[i]
            x[lvl.new_rows[:, i]] = m

    g = power(base, k)
    params = {"k": k, "epsilon": float(epsilon), "b": b, "mesh": mesh, "J": J}
    cloud = PointCloud(g.vertices, x, p, "diamond", params, weight=mesh)
    index = SubstructureIndex(pattern_roles(base), copy_rows(base, k), k, len(base.edges))
    return cloud, index


def function(cloud: PointCloud, addr) -> StepFunction:
    return StepFunction(np.array(cloud.point(addr)), int(cloud.params["J"]), cloud.norm)


def verify_diamond_conditions(cloud: PointCloud, index: SubstructureIndex, rel_tol: float = 1e-9) -> VerificationReport:
    """Check (d1) and (d2) on every copy at every level."""
    mids = [r for r in index.roles if r not in ("s", "t")]
    if index.roles[0] != "s" or index.roles[-1] != "t" or len(mids) < 2:
        raise ValueError("index is not a diamond index")
    eps, p = cloud.epsilon, cloud.norm
    chk = ConditionChecker(cloud, index, rel_tol, ("d1", "d2", "nondegenerate"))
    f1 = 0.5 * root_sum(2 * eps, p)
    f2 = 2.0 ** (1.0 - 1.0 / p) * eps
    for j, rows in sorted(index.levels.items()):
        st = chk.d(rows, "s", "t")
        chk.require_positive("nondegenerate", j, st, np.ones_like(st))
        for m in mids:
            chk.check("d1", j, chk.d(rows, "s", m), f1 * st, st)
            chk.check("d1", j, chk.d(rows, m, "t"), f1 * st, st)
        for a in range(len(mids)):
            for c in range(a + 1, len(mids)):
                chk.check("d2", j, chk.d(rows, mids[a], mids[c]), f2 * st, st)
    return chk.report


def disjoint_support_violations(cloud: PointCloud, index: SubstructureIndex) -> int:
    """Count copies where ``m_i - (s+t)/2`` leaks outside its unit interval or meets ``supp(s-t)``."""
    per_unit = 2 ** int(cloud.params["J"])
    x = cloud.coords
    bad = 0
    for j, rows in index.levels.items():
        step = index.k - j + 1
        s, t = x[rows[:, 0]], x[rows[:, -1]]
        mid = 0.5 * (s + t)
        lo, hi = step * per_unit, (step + 1) * per_unit
        st_outside = np.abs(s - t)[:, lo:].max(axis=1) > 0
        for c in range(1, rows.shape[1] - 1):
            bump = x[rows[:, c]] - mid
            leak = np.abs(np.delete(bump, np.s_[lo:hi], axis=1)).max(axis=1) > 0
            bad += int((leak | st_outside).sum())
    return bad
