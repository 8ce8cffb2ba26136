"""Convexity moduli: analytic models for l_p and sampling-based estimators.

Three families are handled: the modulus of uniform convexity ``delta``, the
rounded-ball modulus ``eta`` and the asymptotic midpoint modulus
``delta~``.  A :class:`ModulusModel` is what the contraction audits consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .norms import lp_norm


class Family(str, Enum):
    UC = "uc"
    ROUNDED_BALL = "rb"
    AMUC = "amuc"


class ModulusEstimationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModulusModel:
    """``modulus(t) >= constant * t**power_type``, optionally with an exact formula.

    When ``exact`` is set it is used for evaluation, multiplied by ``scale``;
    otherwise the power law itself is evaluated.  Fault injection inflates
    both.
    """

    family: Family
    power_type: float
    constant: float
    provenance: str
    exact: Callable[[float], float] | None = field(default=None, compare=False)
    scale: float = 1.0
    table: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if not self.constant > 0:
            raise ValueError("modulus constant must be positive")
        if not self.power_type >= 1:
            raise ValueError("power type must be at least 1")

    def __call__(self, t):
        if self.exact is not None:
            return self.scale * self.exact(t)
        return self.constant * np.asarray(t, dtype=float) ** self.power_type

    def inflated(self, factor: float) -> "ModulusModel":
        return replace(self, constant=self.constant * factor, scale=self.scale * factor,
                       provenance=f"{self.provenance} x{factor:g}")


def uc_lp(p: float) -> ModulusModel:
    """Exact modulus of l_p for p >= 2: ``1 - (1 - (t/2)^p)^(1/p)``.

    The extremal pair ``(a, +t/2)``, ``(a, -t/2)`` with ``a = (1-(t/2)^p)^(1/p)``
    lives in two dimensions, so the value holds in every l_p^d with d >= 2.
    """
    if p < 2:
        raise ValueError("the closed form covers p >= 2 only")

    def delta(t):
        x = np.clip((np.asarray(t, dtype=float) / 2.0) ** p, 0.0, 1.0)
        # log1p/expm1 keep full precision as t -> 0, where the power law is tight
        with np.errstate(divide="ignore"):
            return -np.expm1(np.log1p(-x) / p)

    return ModulusModel(Family.UC, p, 1.0 / (p * 2.0**p), "analytic", delta)


def rb_four_point(p: float) -> ModulusModel:
    """Rounded-ball modulus ``t^p / (2^p - 1)`` implied by the four-point inequality."""
    c = 1.0 / (2.0**p - 1.0)

    def eta(t):
        return c * np.asarray(t, dtype=float) ** p

    return ModulusModel(Family.ROUNDED_BALL, p, c, "analytic", eta)


def amuc_lp(p: float) -> ModulusModel:
    """Asymptotic midpoint modulus of l_p via disjoint supports: ``(1+t^p)^(1/p) - 1``."""
    def dt(t):
        t = np.asarray(t, dtype=float)
        return np.expm1(np.log1p(t**p) / p)

    # concavity of (1+x)^(1/p) on [0, 1] gives (1+t^p)^(1/p) - 1 >= (2^(1/p) - 1) t^p
    return ModulusModel(Family.AMUC, p, 2.0 ** (1.0 / p) - 1.0, "analytic", dt)


def custom(family: Family | str, c: float, p: float) -> ModulusModel:
    return ModulusModel(Family(family), p, c, "user")


def fit_power_law(ts: Sequence[float], values: Sequence[float]) -> tuple[float, float]:
    """Least-squares ``log v = log c + p log t``; returns ``(c, p)``."""
    ts, values = np.asarray(ts, float), np.asarray(values, float)
    ok = (ts > 0) & (values > 0)
    if ok.sum() < 2:
        raise ModulusEstimationError("need two positive samples to fit a power law")
    slope, icpt = np.polyfit(np.log(ts[ok]), np.log(values[ok]), 1)
    return float(math.exp(icpt)), float(slope)


# ----------------------------------------------------------------------------
# uniform convexity


def _sup_midpoint(p: float, dim: int, t: float, rng: np.random.Generator, restarts: int) -> float:
    def unit(v):
        return v / lp_norm(v, p)

    def split(z):
        return unit(z[:dim]), unit(z[dim:])

    def neg_mid(z):
        x, y = split(z)
        return -0.5 * float(lp_norm(x + y, p))

    def gap(z):
        x, y = split(z)
        return float(lp_norm(x - y, p)) - t

    best = -math.inf
    converged = 0
    for _ in range(restarts):
        u = rng.standard_normal(dim)
        v = -u + (t / 2) * rng.standard_normal(dim)
        res = minimize(neg_mid, np.concatenate([u, v]), method="SLSQP",
                       constraints=[{"type": "ineq", "fun": gap}],
                       options={"ftol": 1e-13, "maxiter": 500})
        if not res.success or gap(res.x) < -1e-9 * max(t, 1.0):
            continue
        converged += 1
        best = max(best, -res.fun)
    if converged == 0:
        raise ModulusEstimationError(f"no restart converged for p={p}, dim={dim}, t={t}")
    return best


def uc_modulus_estimate(p: float, dim: int, t_grid: Sequence[float], restarts: int = 8,
                        seed: int = 0) -> ModulusModel:
    """Empirical upper estimate of the l_p^dim modulus of uniform convexity.

    For each ``t`` the midpoint norm is maximized over unit-sphere pairs with
    ``|x - y| >= t`` (SLSQP, seeded random restarts); ``1 - max`` never
    undershoots the true modulus by more than the optimizer's tolerance.
    """
    if not 1 < p < math.inf:
        raise ValueError("p must lie in (1, inf)")
    if dim < 2:
        raise ValueError("dim must be at least 2")
    rng = np.random.default_rng(seed)
    table = []
    for t in t_grid:
        if not 0 < t <= 2:
            raise ValueError(f"t must lie in (0, 2], got {t}")
        table.append((float(t), 1.0 - _sup_midpoint(p, dim, float(t), rng, restarts)))
    c, pw = fit_power_law(*zip(*table)) if len(table) >= 2 else (table[0][1] / table[0][0] ** p, p)
    return ModulusModel(Family.UC, max(pw, 1.0), c, "empirical", None, 1.0, tuple(table))


# ----------------------------------------------------------------------------
# asymptotic midpoint uniform convexity


def _inner_inf(x_head: np.ndarray, p: float, t: float, tail: int, rng, restarts: int) -> float:
    def obj(w):
        z = w / lp_norm(w, p)
        plus = np.concatenate([x_head, t * z])
        minus = np.concatenate([x_head, -t * z])
        return max(float(lp_norm(plus, p)), float(lp_norm(minus, p)))

    best = math.inf
    for _ in range(restarts):
        res = minimize(obj, rng.standard_normal(tail), method="Powell",
                       options={"xtol": 1e-10, "ftol": 1e-13, "maxfev": 4000 * tail})
        best = min(best, float(res.fun))
    return best


def amuc_modulus_estimate(p: float, dim: int, tail_start: int, t_grid: Sequence[float],
                          samples: int = 8, restarts: int = 2, seed: int = 0) -> ModulusModel:
    """Tail-subspace approximation of the asymptotic midpoint modulus of l_p^dim.

    The supremum over finite-codimensional subspaces is replaced by the
    single tail ``span(e_tail_start, ..., e_dim)`` (1-based); ``x`` ranges over
    seeded samples of the unit sphere of the head coordinates.
    """
    if not 1 <= p < math.inf:
        raise ValueError("p must lie in [1, inf)")
    if not 1 < tail_start <= dim:
        raise ValueError("tail_start must lie in (1, dim]")
    tail = dim - tail_start + 1
    if tail < 2:
        raise ValueError("tail dimension must be at least 2")
    head = tail_start - 1
    rng = np.random.default_rng(seed)
    xs = rng.standard_normal((samples, head))
    xs /= lp_norm(xs, p)[:, None]
    table = []
    for t in t_grid:
        if not 0 < t <= 1:
            raise ValueError(f"t must lie in (0, 1], got {t}")
        worst = min(_inner_inf(x, p, float(t), tail, rng, restarts) for x in xs)
        table.append((float(t), worst - 1.0))
    if len(table) >= 2:
        c, pw = fit_power_law(*zip(*table))
    else:
        c, pw = table[0][1] / table[0][0] ** p, p
    return ModulusModel(Family.AMUC, max(pw, 1.0), c, "empirical", None, 1.0, tuple(table))
