"""Independent reference computations used to freeze derived values.

Nothing here imports the package: each oracle rebuilds its answer from the
defining formula with plain loops, so agreement is a genuine cross-check.
"""

import itertools
import math
from collections import deque

import numpy as np


def norm(v, p):
    v = np.abs(np.asarray(v, dtype=float))
    if math.isinf(p):
        return float(v.max())
    return float((v**p).sum() ** (1.0 / p))


def bfs_distances(n, edges, src):
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    dist = [-1] * n
    dist[src] = 0
    todo = deque([src])
    while todo:
        u = todo.popleft()
        for w in adj[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                todo.append(w)
    return dist


def slash_power_edges(pattern_edges, n_pattern, k):
    """Left-iterated slash power by explicit edge substitution.

    ``pattern_edges`` use 0 = source, 1 = sink, 2.. = interior vertices.
    Returns ``(n_vertices, edges)`` with vertex 0 = s and 1 = t.
    """
    edges = [(0, 1)]
    n = 2
    for _ in range(k):
        new = []
        for u, v in edges:
            local = {0: u, 1: v}
            for w in range(2, n_pattern):
                local[w] = n
                n += 1
            new.extend((local[a], local[b]) for a, b in pattern_edges)
        edges = new
    return n, edges


LAAKSO_PATTERN = [(0, 2), (2, 3), (2, 4), (3, 5), (4, 5), (5, 1)]  # s a m1 m2 b t


def diamond_pattern(b):
    return [(0, 2 + i) for i in range(b)] + [(2 + i, 1) for i in range(b)]


def laakso_points(k, q, eps):
    """Thin Laakso points by direct recursion on (s, t, step)."""
    dim = k + 1
    s0, t0 = np.zeros(dim), np.zeros(dim)
    s0[0], t0[0] = -1.0, 1.0
    pts = [s0, t0]
    edges = [(s0, t0)]
    for step in range(1, k + 1):
        nxt = []
        for s, t in edges:
            a = 0.75 * s + 0.25 * t
            b = 0.25 * s + 0.75 * t
            lift = np.zeros(dim)
            lift[step] = 0.5 * eps * norm(s - t, q)
            m1 = 0.5 * (s + t) + lift
            m2 = 0.5 * (s + t) - lift
            pts += [a, m1, m2, b]
            nxt += [(s, a), (a, m1), (a, m2), (m1, b), (m2, b), (b, t)]
        edges = nxt
    return np.array(pts)


def diamond_points(k, p, eps, b, J=None):
    """Thin diamond step functions built cell by cell from the indicator sums."""
    J = b if J is None else J
    cells = 2**J
    n = (k + 1) * cells
    mesh = 1.0 / cells

    def lp(f):
        return (np.sum(np.abs(f) ** p) * mesh) ** (1.0 / p)

    s0 = np.zeros(n)
    s0[:cells] = 1.0
    pts = [s0, -s0]
    edges = [(s0, -s0)]
    for step in range(1, k + 1):
        nxt = []
        for s, t in edges:
            for i in range(1, b + 1):
                m = 0.5 * (s + t)
                width = cells // 2**i
                for r in range(1, 2**i + 1):
                    lo = step * cells + (r - 1) * width
                    m[lo:lo + width] += (-1) ** r * eps * lp(s - t)
                pts.append(m)
                nxt += [(s, m), (m, t)]
        edges = nxt
    return np.array(pts), mesh


def brute_min_cover(d, members, r):
    """Fewest points of the space whose closed r-balls cover ``members``."""
    n = len(d)
    members = list(members)
    for size in range(1, len(members) + 1):
        for centers in itertools.combinations(range(n), size):
            if all(min(d[c][m] for c in centers) <= r * (1 + 1e-12) for m in members):
                return size
    return len(members)


def doubling_brute(d):
    """Exact doubling constant of a small finite metric (balls centred at points)."""
    n = len(d)
    best = 1
    radii = sorted({d[i][j] for i in range(n) for j in range(n) if d[i][j] > 0})
    for c in range(n):
        for r in radii:
            ball = [m for m in range(n) if d[c][m] <= r * (1 + 1e-12)]
            best = max(best, brute_min_cover(d, ball, r / 2))
    return best


def uc_grid(p, t, n=4000):
    """Modulus of l_p^2 at ``t`` by a dense search over pairs on the unit circle."""
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    c, s = np.cos(th), np.sin(th)
    r = (np.abs(c) ** p + np.abs(s) ** p) ** (1.0 / p)
    x = np.stack([c / r, s / r], axis=1)
    best = 0.0
    for i in range(n):
        diff = (np.abs(x - x[i]) ** p).sum(axis=1) ** (1.0 / p)
        ok = diff >= t
        if ok.any():
            mid = ((np.abs(x[ok] + x[i]) ** p).sum(axis=1) ** (1.0 / p)).max() / 2
            best = max(best, mid)
    return 1.0 - best


def four_point_direct(x1, x2, x3, x4, p, C, q=2.0):
    def d(a, b):
        return norm(np.subtract(a, b), q)
    lhs = d(x1, x3) ** p + d(x2, x4) ** p
    rhs = C / 4 * (d(x1, x2) ** p + d(x2, x3) ** p + d(x3, x4) ** p + d(x4, x1) ** p)
    if rhs == 0:
        return 0.0 if lhs == 0 else math.inf
    return lhs / rhs


def level_recursion(decrement, d, k, p, q):
    """Smallest ``D`` on a coarse-to-fine grid with ``D >= (k-1) * decrement * D^(1-pq/(q-p))``."""
    lo, hi = 1e-12, 1e6
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if mid >= (k - 1) * decrement * mid ** (1 - p * q / (q - p)):
            hi = mid
        else:
            lo = mid
    return hi
