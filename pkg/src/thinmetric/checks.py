"""Condition reports shared by the Laakso and diamond verifiers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cloud import PointCloud, SubstructureIndex


def root_sum(x: float, q: float) -> float:
    """``(1 + x^q)^(1/q)`` with the convention ``max(1, x)`` at ``q = inf``."""
    if math.isinf(q):
        return max(1.0, x)
    return (1.0 + x**q) ** (1.0 / q)


@dataclass
class ConditionResult:
    name: str
    worst: float = 0.0
    level: int | None = None
    copy: int | None = None
    path: tuple[int, ...] | None = None
    checks: int = 0
    failures: int = 0
    passed: bool = True

    def describe(self) -> str:
        if self.passed:
            return f"{self.name}: pass (worst rel err {self.worst:.3e} over {self.checks} comparisons)"
        return (f"{self.name}: FAIL at level {self.level} copy {self.copy} path {self.path}: "
                f"rel err {self.worst:.3e} ({self.failures} failing comparisons)")


@dataclass
class VerificationReport:
    rel_tol: float
    conditions: dict[str, ConditionResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def failures(self) -> list[ConditionResult]:
        return [c for c in self.conditions.values() if not c.passed]

    def summary(self) -> str:
        return "\n".join(c.describe() for c in self.conditions.values())

    def rows(self) -> list[dict]:
        return [
            {"condition": c.name, "passed": c.passed, "worst_rel_err": c.worst, "level": c.level,
             "copy": c.copy, "checks": c.checks, "failures": c.failures}
            for c in self.conditions.values()
        ]


class ConditionChecker:
    """Accumulates ``observed == expected`` checks, relative to each copy's ``d(s, t)``."""

    def __init__(self, cloud: PointCloud, index: SubstructureIndex, rel_tol: float, names):
        if index.levels and max(int(r.max()) for r in index.levels.values()) >= len(cloud):
            raise ValueError("substructure index does not match the point cloud")
        self.cloud = cloud
        self.index = index
        self.report = VerificationReport(rel_tol, {n: ConditionResult(n) for n in names})

    def d(self, rows: np.ndarray, u: str, v: str) -> np.ndarray:
        ix = self.index
        return self.cloud.pair_distances(rows[:, ix.col(u)], rows[:, ix.col(v)])

    def check(self, name: str, j: int, observed: np.ndarray, expected: np.ndarray, scale: np.ndarray):
        with np.errstate(divide="ignore", invalid="ignore"):
            err = np.abs(observed - expected) / scale
        err = np.where(np.isfinite(err), err, np.inf)
        self._record(name, j, err)

    def require_positive(self, name: str, j: int, values: np.ndarray, scale: np.ndarray):
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = values / scale
        err = np.where(rel > self.report.rel_tol, 0.0, np.inf)
        self._record(name, j, err)

    def _record(self, name, j, err):
        res = self.report.conditions[name]
        res.checks += len(err)
        if len(err) == 0:
            return
        bad = err > self.report.rel_tol
        res.failures += int(bad.sum())
        c = int(np.argmax(err))
        if err[c] > res.worst or (res.passed and bad[c]):
            res.worst = float(err[c])
            res.level, res.copy = j, c
            res.path = self.index.copy_path(j, c)
        if bad.any():
            res.passed = False
