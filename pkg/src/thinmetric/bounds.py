"""Closed-form distortion lower bounds from the self-improvement argument.

Both bounds come from a per-level decrement ``D_(j-1) - D_j >= A * D^(1 - pq/(q-p))``
summed over ``k - 1`` levels against ``D_1 - D_k <= D``; the smallest ``D``
compatible with that is the fixed point

    D_min = (A (k - 1)) ** ((q - p) / (p q)),

with ``A = c gamma^p / 2`` (uniformly convex target) or
``A = c gamma^p / 2^(p+2)`` (rounded-ball target).  The thinness fed to the
construction is ``eps* = gamma * D_min^(-p/(q-p))``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class LowerBound:
    family: str
    k: int
    p: float
    q: float
    c: float
    gamma: float
    gamma_max: float
    decrement: float
    epsilon_star: float
    d_min: float

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def exponent(self) -> float:
        return (self.q - self.p) / (self.p * self.q)


def _fixed_point(family, k, p, q, c, gamma, gamma_max, decrement):
    if gamma is None:
        gamma = 0.5 * gamma_max
    if not 0 < gamma < gamma_max:
        raise ValueError(f"gamma must lie in (0, {gamma_max}), got {gamma}")
    a = decrement(gamma)
    d_min = (a * (k - 1)) ** ((q - p) / (p * q))
    eps = gamma * d_min ** (-p / (q - p))
    return LowerBound(family, k, p, q, c, gamma, gamma_max, a, eps, d_min)


def _check(k, p, q, c):
    if not p < q:
        raise ValueError(f"need p < q, got p={p}, q={q}")
    if k < 2:
        raise ValueError("k must be at least 2 (the level sum is empty otherwise)")
    if not c > 0:
        raise ValueError("c must be positive")


def lower_bound_uc(k: int, p: float, q: float, c: float, gamma: float | None = None) -> LowerBound:
    """Bound for targets with ``delta(t) >= c t^p``, ``2 <= p < q``."""
    _check(k, p, q, c)
    if p < 2:
        raise ValueError("uniformly convex bound needs p >= 2")
    gamma_max = (c / 2.0 ** (q + 1)) ** (1.0 / (q - p))
    return _fixed_point("uc", k, p, q, c, gamma, gamma_max, lambda g: 0.5 * c * g**p)


def lower_bound_rb(k: int, p: float, q: float, c: float, gamma: float | None = None) -> LowerBound:
    """Bound for rounded-ball targets with ``eta(t) >= c t^p``, ``1 < p < q``."""
    _check(k, p, q, c)
    if not p > 1:
        raise ValueError("rounded-ball bound needs p > 1")
    gamma_max = (c / 2.0 ** (p + q + 2)) ** (1.0 / (q - p))
    return _fixed_point("rb", k, p, q, c, gamma, gamma_max, lambda g: c * g**p / 2.0 ** (p + 2))


def iterate_levels(bound: LowerBound, d: float) -> list[float]:
    """``D_1 = d, D_j = D_(j-1) - decrement * d^(1 - pq/(q-p))`` for ``j = 2..k``."""
    p, q = bound.p, bound.q
    step = bound.decrement * d ** (1.0 - p * q / (q - p))
    seq = [d]
    for _ in range(2, bound.k + 1):
        seq.append(seq[-1] - step)
    return seq
