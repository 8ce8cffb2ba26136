"""Finite-metric analytics: doubling estimates, approximate midpoint sets, roundness."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cloud import PointCloud
from .norms import lp_norm

TRIANGLE_SLACK = 1e-12
BALL_SLACK = 1e-12


class FiniteMetric:
    """Metric on ``n`` labelled points, backed by a matrix or by coordinates.

    Coordinate-backed metrics compute rows on demand, so clouds with tens of
    thousands of points never materialize an ``n x n`` matrix.
    """

    def __init__(self, labels: Sequence, dist: np.ndarray | None = None, *,
                 points: np.ndarray | None = None, p: float = 2.0, weight: float = 1.0):
        if (dist is None) == (points is None):
            raise ValueError("give exactly one of dist or points")
        self.labels = list(labels)
        if dist is not None:
            dist = np.asarray(dist, dtype=float)
            if dist.shape != (len(self.labels),) * 2:
                raise ValueError("distance matrix shape does not match labels")
            if not np.allclose(dist, dist.T, rtol=0, atol=0) or np.any(np.diag(dist) != 0) or np.any(dist < 0):
                raise ValueError("distance matrix must be symmetric, nonnegative, zero on the diagonal")
            off = dist + np.eye(len(dist))
            if np.any(off <= 0):
                raise ValueError("distinct labels at distance zero")
        self._dist = dist
        self._points = None if points is None else np.asarray(points, dtype=float)
        self.p = p
        self.weight = weight

    @classmethod
    def from_cloud(cls, cloud: PointCloud) -> "FiniteMetric":
        return cls([str(a) for a in cloud.addresses], points=cloud.coords, p=cloud.norm, weight=cloud.weight)

    @classmethod
    def from_points(cls, points, p: float = 2.0) -> "FiniteMetric":
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return cls(list(range(len(pts))), points=pts, p=p)

    def __len__(self):
        return len(self.labels)

    def row(self, i: int) -> np.ndarray:
        if self._dist is not None:
            return self._dist[i]
        return lp_norm(self._points - self._points[i], self.p, weight=self.weight)

    def d(self, i: int, j: int) -> float:
        if self._dist is not None:
            return float(self._dist[i, j])
        return float(lp_norm(self._points[i] - self._points[j], self.p, weight=self.weight))

    def sub(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        if self._dist is not None:
            return self._dist[np.ix_(rows, cols)]
        a = self._points[rows][:, None, :]
        b = self._points[cols][None, :, :]
        return lp_norm(a - b, self.p, weight=self.weight)

    @property
    def matrix(self) -> np.ndarray:
        if self._dist is None:
            self._dist = np.stack([self.row(i) for i in range(len(self))])
            self._points = None
        return self._dist

    def check_triangle(self) -> bool:
        d = self.matrix
        scale = d.max() if d.size else 0.0
        for k in range(len(d)):
            if np.any(d > d[:, [k]] + d[[k], :] + TRIANGLE_SLACK * scale):
                return False
        return True

    def delete(self, i: int) -> "FiniteMetric":
        keep = [j for j in range(len(self)) if j != i]
        labels = [self.labels[j] for j in keep]
        if self._points is not None:
            return FiniteMetric(labels, points=self._points[keep], p=self.p, weight=self.weight)
        return FiniteMetric(labels, self._dist[np.ix_(keep, keep)])


# ----------------------------------------------------------------------------
# doubling


@dataclass(frozen=True)
class Sampling:
    """Which balls the doubling estimate looks at.

    ``centers=None`` uses every point; an integer draws that many centers
    with ``seed``.  ``radii="pairwise"`` uses every distinct distance from the
    center (ball contents only change there); an integer uses that many
    geometric scales between the smallest and largest distance.
    """

    centers: int | None = None
    radii: str | int = "pairwise"
    seed: int = 0


@dataclass
class DoublingEstimate:
    upper: int
    lower: int
    witness_ball: tuple[int, float]
    packing_ball: tuple[int, float]
    balls_examined: int = 0


def _in_ball(row: np.ndarray, r: float) -> np.ndarray:
    return np.flatnonzero(row <= r * (1 + BALL_SLACK))


def greedy_cover(m: FiniteMetric, members: np.ndarray, radius: float, first: int | None = None) -> list[int]:
    """Farthest-point greedy cover of ``members`` by balls of ``radius``.

    Centers are members; they are pairwise more than ``radius`` apart.
    """
    centers = []
    if len(members) == 0:
        return centers
    reach = np.full(len(members), np.inf)
    nxt = 0 if first is None else int(np.flatnonzero(members == first)[0])
    while True:
        c = members[nxt]
        centers.append(int(c))
        reach = np.minimum(reach, m.sub(np.array([c]), members)[0])
        far = int(np.argmax(reach))
        if reach[far] <= radius * (1 + BALL_SLACK):
            return centers
        nxt = far


def separated_subset(m: FiniteMetric, members: np.ndarray, sep: float) -> list[int]:
    """Greedy subset of ``members`` with pairwise distances strictly above ``sep``."""
    chosen = []
    alive = np.ones(len(members), dtype=bool)
    for i in range(len(members)):
        if not alive[i]:
            continue
        chosen.append(int(members[i]))
        alive &= m.sub(np.array([members[i]]), members)[0] > sep * (1 + BALL_SLACK)
    return chosen


def _radii_for(row: np.ndarray, policy: Sampling) -> np.ndarray:
    d = np.unique(row[row > 0])
    if len(d) == 0:
        return np.array([0.0])
    if policy.radii == "pairwise":
        return d
    n = int(policy.radii)
    return np.geomspace(d[0], d[-1], n)


def doubling_constant(m: FiniteMetric, radii: Sampling = Sampling()) -> DoublingEstimate:
    """Greedy upper bound and packing lower bound on the doubling constant.

    ``upper`` is the largest farthest-point cover of a sampled ball ``B(x, r)``
    by balls of radius ``r/2``.  ``lower`` is the largest set of points of a
    sampled ball at pairwise distance ``> r``; each half-radius ball holds at
    most one of them, so it lower-bounds that ball's cover number.  Both are
    relative to the sampled balls.
    """
    n = len(m)
    if n == 0:
        raise ValueError("empty metric")
    if radii.centers is None or radii.centers >= n:
        centers = np.arange(n)
    else:
        centers = np.sort(np.random.default_rng(radii.seed).choice(n, radii.centers, replace=False))
    best = DoublingEstimate(1, 1, (int(centers[0]), 0.0), (int(centers[0]), 0.0))
    examined = 0
    for x in centers:
        row = m.row(int(x))
        for r in _radii_for(row, radii):
            members = _in_ball(row, r)
            examined += 1
            if len(members) <= best.lower and len(members) <= best.upper:
                continue
            cover = greedy_cover(m, members, r / 2, first=int(x))
            if len(cover) > best.upper:
                best.upper, best.witness_ball = len(cover), (int(x), float(r))
            if len(members) > best.lower:
                pack = separated_subset(m, members, r)
                if len(pack) > best.lower:
                    best.lower, best.packing_ball = len(pack), (int(x), float(r))
    best.balls_examined = examined
    return best


def exact_min_cover(m: FiniteMetric, center: int, r: float) -> int:
    """Minimum number of ``r/2``-balls centered at points of ``m`` covering ``B(center, r)``.

    Exhaustive; only for tiny metrics.
    """
    if len(m) > 12:
        raise ValueError("exhaustive cover search is limited to 12 points")
    d = m.matrix
    members = set(_in_ball(d[center], r).tolist())
    covers = [set(_in_ball(d[c], r / 2).tolist()) & members for c in range(len(m))]
    for size in range(1, len(m) + 1):
        for combo in itertools.combinations(range(len(m)), size):
            if set().union(*(covers[c] for c in combo)) >= members:
                return size
    raise AssertionError("unreachable: every point covers itself")


# ----------------------------------------------------------------------------
# midpoints and rounded balls


@dataclass
class MidSet:
    members: list[int]
    diameter: float


def mid_set(m: FiniteMetric, x: int, y: int, eta: float) -> MidSet:
    """Points within ``(1+eta)/2 * d(x,y)`` of both ``x`` and ``y``."""
    if x == y:
        raise ValueError("x and y must differ")
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    r = 0.5 * (1 + eta) * m.d(x, y)
    near = np.maximum(m.row(x), m.row(y)) <= r * (1 + BALL_SLACK)
    members = np.flatnonzero(near)
    diam = float(m.sub(members, members).max()) if len(members) > 1 else 0.0
    return MidSet(members.tolist(), diam)


@dataclass
class RoundedBallScan:
    t: float
    eta: float
    etas: list[float]
    max_ratio: list[float]
    witnesses: list[tuple[int, int] | None] = field(default_factory=list)


def rounded_ball_scan(m: FiniteMetric, t: float, eta_grid: Sequence[float],
                      pairs: Sequence[tuple[int, int]] | None = None) -> RoundedBallScan:
    """Sample-relative rounded-ball modulus at ``t``.

    For each ``eta`` reports ``max diam(Mid(x,y,eta)) / d(x,y)`` over the pairs;
    ``eta`` in the result is the largest grid value whose maximum stays below
    ``t`` (0.0 if none does).  A finite sample can only witness violations, so
    this is an upper estimate of what the sample allows, not the ambient modulus.
    """
    if not 0 < t <= 1:
        raise ValueError("t must lie in (0, 1]")
    d = m.matrix
    n = len(m)
    if pairs is None:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    etas = sorted(float(e) for e in eta_grid)
    ratios, witnesses = [], []
    best_eta = 0.0
    for eta in etas:
        worst, wit = 0.0, None
        for x, y in pairs:
            ms = mid_set(m, x, y, eta)
            ratio = ms.diameter / d[x, y]
            if ratio > worst:
                worst, wit = ratio, (x, y)
        ratios.append(worst)
        witnesses.append(wit)
        if worst < t:
            best_eta = max(best_eta, eta)
    return RoundedBallScan(t, best_eta, etas, ratios, witnesses)


# ----------------------------------------------------------------------------
# four-point inequality


def four_point_ratio(d13, d24, d12, d23, d34, d41, p: float, C: float) -> np.ndarray:
    """``(d13^p + d24^p) / (C/4 (d12^p + d23^p + d34^p + d41^p))``, with 0/0 read as 0."""
    lhs = np.asarray(d13) ** p + np.asarray(d24) ** p
    rhs = 0.25 * C * (np.asarray(d12) ** p + np.asarray(d23) ** p + np.asarray(d34) ** p + np.asarray(d41) ** p)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), np.where(lhs > 0, np.inf, 0.0))
    return ratio


def four_point_ratio_points(x1, x2, x3, x4, p: float, C: float, norm: float = 2.0) -> np.ndarray:
    """Vectorized ratio for arrays of quadruples of vectors in l_norm."""
    def dd(a, b):
        return lp_norm(np.asarray(a) - np.asarray(b), norm)
    return four_point_ratio(dd(x1, x3), dd(x2, x4), dd(x1, x2), dd(x2, x3), dd(x3, x4), dd(x4, x1), p, C)


@dataclass
class FourPointResult:
    max_ratio: float
    n_checked: int
    witnesses: list[tuple[tuple[int, int, int, int], float]]

    @property
    def violated(self) -> bool:
        return self.max_ratio > 1.0


def four_point_check(m: FiniteMetric, p: float, C: float, samples: int | None = None,
                     seed: int = 0, max_witnesses: int = 10) -> FourPointResult:
    """Worst four-point ratio over sampled (or, with ``samples=None``, all) quadruples."""
    if not p > 0:
        raise ValueError("p must be positive")
    if not 0 < C <= 2.0**p:
        raise ValueError(f"C must lie in (0, 2^p], got {C}")
    n = len(m)
    if n < 4:
        raise ValueError("need at least four points")
    if samples is None:
        quads = np.array(list(itertools.product(range(n), repeat=4)), dtype=np.int64)
    else:
        quads = np.random.default_rng(seed).integers(0, n, size=(samples, 4))
    d = m.matrix
    i1, i2, i3, i4 = quads.T
    ratio = four_point_ratio(d[i1, i3], d[i2, i4], d[i1, i2], d[i2, i3], d[i3, i4], d[i4, i1], p, C)
    bad = np.flatnonzero(ratio > 1.0)
    bad = bad[np.argsort(-ratio[bad], kind="stable")][:max_witnesses]
    wit = [(tuple(int(v) for v in quads[b]), float(ratio[b])) for b in bad]
    return FourPointResult(float(ratio.max()), len(quads), wit)


def four_point_modulus(p: float) -> float:
    """Constant ``c`` in ``eta(t) >= c t^p`` implied by the four-point inequality."""
    return 1.0 / (2.0**p - 1.0) if p >= 1 else 1.0


__all__ = [
    "FiniteMetric", "Sampling", "DoublingEstimate", "doubling_constant", "greedy_cover",
    "separated_subset", "exact_min_cover", "mid_set", "MidSet", "rounded_ball_scan",
    "RoundedBallScan", "four_point_ratio", "four_point_ratio_points", "four_point_check",
    "FourPointResult", "four_point_modulus",
]
