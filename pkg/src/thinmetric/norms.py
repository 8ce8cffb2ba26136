"""l_p norms with an optional cell weight (for step functions on a grid)."""

import math

import numpy as np


def parse_exponent(value) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity", "oo"):
        return math.inf
    p = float(value)
    if not (p >= 1.0):
        raise ValueError(f"norm exponent must be in [1, inf], got {value!r}")
    return p


def format_exponent(p: float):
    return "inf" if math.isinf(p) else p


def lp_norm(v: np.ndarray, p: float, axis: int = -1, weight: float = 1.0) -> np.ndarray:
    """``(sum |v_i|^p * weight)^(1/p)`` along ``axis``; ``p=inf`` is the max norm."""
    a = np.abs(v)
    if math.isinf(p):
        return a.max(axis=axis)
    if p == 1.0:
        return a.sum(axis=axis) * weight
    if p == 2.0:
        return np.sqrt((a * a).sum(axis=axis) * weight)
    return ((a**p).sum(axis=axis) * weight) ** (1.0 / p)


def pair_distances(x: np.ndarray, i: np.ndarray, j: np.ndarray, p: float, weight: float = 1.0) -> np.ndarray:
    return lp_norm(x[i] - x[j], p, weight=weight)


def distances_from(x: np.ndarray, i: int, p: float, weight: float = 1.0) -> np.ndarray:
    return lp_norm(x - x[i], p, weight=weight)


def pairwise(x: np.ndarray, p: float, weight: float = 1.0) -> np.ndarray:
    """Full distance matrix; intended for clouds of at most a few thousand points."""
    n = len(x)
    out = np.empty((n, n))
    for i in range(n):
        out[i] = lp_norm(x - x[i], p, weight=weight)
    return out
