"""Directed s-t graphs, the slash product, recursive powers and their metrics.

Every vertex carries a hierarchical :class:`VertexAddress`.  Edges of
``G^k`` (left iteration ``G^k = G^(k-1) (/) G``) are indexed by paths
``(0, i_1, ..., i_k)``: the leading 0 is the single edge of ``G^0`` and
``i_r`` is the index of the base edge chosen at step ``r``.  A vertex created
when the edge with path ``P`` is expanded is addressed ``(P, role)``, so its
creation level equals ``len(P)``.  With this labelling the slash product is
associative on the nose: ``(A (/) B) (/) C`` and ``A (/) (B (/) C)`` produce
identical vertex and edge sets when the factors are powers of one base.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

SOURCE = "s"
SINK = "t"


class GraphError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class VertexAddress:
    edge_path: tuple[int, ...]
    role: str

    def __post_init__(self):
        if self.role in (SOURCE, SINK) and self.edge_path:
            raise GraphError(f"role {self.role!r} is reserved for level-0 vertices")
        if not self.edge_path and self.role not in (SOURCE, SINK):
            raise GraphError(f"level-0 vertex must be source or sink, got {self.role!r}")
        if any(i < 0 for i in self.edge_path):
            raise GraphError("edge indices must be nonnegative")

    @property
    def creation_level(self) -> int:
        return len(self.edge_path)

    def __str__(self) -> str:
        if not self.edge_path:
            return f"L0:{self.role}"
        path = ".".join(str(i) for i in self.edge_path)
        return f"L{len(self.edge_path)}:{path}:{self.role}"

    @classmethod
    def parse(cls, text: str) -> "VertexAddress":
        parts = text.split(":")
        try:
            level = int(parts[0][1:])
        except (ValueError, IndexError):
            raise GraphError(f"malformed address {text!r}") from None
        if not parts[0].startswith("L"):
            raise GraphError(f"malformed address {text!r}")
        if level == 0:
            if len(parts) != 2:
                raise GraphError(f"malformed address {text!r}")
            return cls((), parts[1])
        if len(parts) != 3:
            raise GraphError(f"malformed address {text!r}")
        path = tuple(int(i) for i in parts[1].split("."))
        if len(path) != level:
            raise GraphError(f"address {text!r}: level {level} but path length {len(path)}")
        return cls(path, parts[2])


S_ADDR = VertexAddress((), SOURCE)
T_ADDR = VertexAddress((), SINK)

Edge = tuple[VertexAddress, VertexAddress]


@dataclass(frozen=True, eq=False)
class StGraph:
    """Immutable directed s-t graph.

    ``edge_paths[i]`` is the hierarchical index of ``edges[i]``.  Equality
    compares vertex sets, edge sets and terminals, so two graphs built by
    different association orders compare equal when their labels agree.
    """

    vertices: tuple[VertexAddress, ...]
    edges: tuple[Edge, ...]
    source: VertexAddress
    sink: VertexAddress
    edge_paths: tuple[tuple[int, ...], ...]
    name: str = ""
    _validated: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self._validated:
            _validate(self)

    def __eq__(self, other):
        if not isinstance(other, StGraph):
            return NotImplemented
        return (
            self.source == other.source
            and self.sink == other.sink
            and set(self.vertices) == set(other.vertices)
            and set(self.edges) == set(other.edges)
        )

    def __hash__(self):
        return hash((self.source, self.sink, len(self.vertices), len(self.edges)))

    @cached_property
    def index(self) -> dict[VertexAddress, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @property
    def interior(self) -> list[VertexAddress]:
        return [v for v in self.vertices if v not in (self.source, self.sink)]

    def edge_array(self) -> np.ndarray:
        idx = self.index
        return np.array([(idx[u], idx[v]) for u, v in self.edges], dtype=np.int64).reshape(-1, 2)

    def to_json(self, base: str = "", k: int | None = None) -> dict:
        return {
            "base": base or self.name,
            "k": k,
            "vertices": [str(v) for v in self.vertices],
            "edges": [[str(u), str(v)] for u, v in self.edges],
            "source": str(self.source),
            "sink": str(self.sink),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "StGraph":
        vertices = tuple(VertexAddress.parse(v) for v in doc["vertices"])
        edges = tuple((VertexAddress.parse(u), VertexAddress.parse(v)) for u, v in doc["edges"])
        paths = _infer_edge_paths(len(edges), doc.get("k"))
        return cls(vertices, edges, VertexAddress.parse(doc["source"]),
                   VertexAddress.parse(doc["sink"]), paths, name=doc.get("base", ""))


def _infer_edge_paths(n: int, k: int | None):
    # serialized graphs keep canonical edge order, so paths are positional
    if not k:
        return tuple((0, i) for i in range(n))
    n_base = round(n ** (1.0 / k))
    return tuple(edge_path_of(i, k, n_base) for i in range(n))


def _validate(g: StGraph) -> None:
    if g.source == g.sink:
        raise GraphError("source and sink coincide")
    vset = set(g.vertices)
    if len(vset) != len(g.vertices):
        raise GraphError("duplicate vertices")
    if g.source not in vset or g.sink not in vset:
        raise GraphError("source/sink not among vertices")
    if len(g.edge_paths) != len(g.edges):
        raise GraphError("edge_paths must align with edges")
    seen = set()
    for u, v in g.edges:
        if u not in vset or v not in vset:
            raise GraphError(f"edge endpoint outside vertex set: {u} -> {v}")
        if u == v:
            raise GraphError(f"self-loop at {u}")
        key = frozenset((u, v))
        if key in seen:
            raise GraphError(f"duplicate edge {u} -> {v}")
        seen.add(key)
    if len(g.vertices) > 1:
        ea = g.edge_array()
        n = len(g.vertices)
        adj = coo_matrix((np.ones(len(ea)), (ea[:, 0], ea[:, 1])), shape=(n, n))
        ncomp, _ = connected_components(adj, directed=False)
        if ncomp != 1:
            raise GraphError("underlying undirected graph is disconnected")


# ----------------------------------------------------------------------------
# base graphs


def _orient_by_layers(roles: Sequence[str], undirected: Sequence[tuple[str, str]]):
    """Orient each edge from lower to higher BFS layer out of the source."""
    nbrs = {r: [] for r in roles}
    for u, v in undirected:
        nbrs[u].append(v)
        nbrs[v].append(u)
    layer = {SOURCE: 0}
    queue = deque([SOURCE])
    while queue:
        u = queue.popleft()
        for w in nbrs[u]:
            if w not in layer:
                layer[w] = layer[u] + 1
                queue.append(w)
    unreached = [r for r in roles if r not in layer]
    if unreached:
        raise GraphError(f"pattern vertices {unreached} are not connected to the source")
    order = {r: i for i, r in enumerate(roles)}
    out = []
    for u, v in undirected:
        if (layer[u], order[u]) > (layer[v], order[v]):
            u, v = v, u
        out.append((u, v))
    return out


def from_pattern(name: str, roles: Sequence[str], edges: Sequence[tuple[str, str]]) -> StGraph:
    """Build the level-1 graph of a base pattern given by role names.

    ``roles`` must contain ``"s"`` and ``"t"``; interior vertices become
    ``L1:0:<role>``.  Edge orientation follows BFS layers from the source.
    """
    if SOURCE not in roles or SINK not in roles:
        raise GraphError("pattern needs source and sink roles")

    def addr(r):
        if r == SOURCE:
            return S_ADDR
        if r == SINK:
            return T_ADDR
        return VertexAddress((0,), r)

    oriented = _orient_by_layers(roles, edges)
    vertices = (S_ADDR, T_ADDR) + tuple(addr(r) for r in roles if r not in (SOURCE, SINK))
    return StGraph(
        vertices=vertices,
        edges=tuple((addr(u), addr(v)) for u, v in oriented),
        source=S_ADDR,
        sink=T_ADDR,
        edge_paths=tuple((0, i) for i in range(len(oriented))),
        name=name,
    )


def single_edge() -> StGraph:
    return StGraph((S_ADDR, T_ADDR), ((S_ADDR, T_ADDR),), S_ADDR, T_ADDR, ((0,),), name="K2")


LAAKSO_ROLES = ("s", "a", "m1", "m2", "b", "t")


def laakso_base() -> StGraph:
    return from_pattern(
        "laakso",
        LAAKSO_ROLES,
        [("s", "a"), ("a", "m1"), ("a", "m2"), ("m1", "b"), ("m2", "b"), ("b", "t")],
    )


def k2b(b: int) -> StGraph:
    """Complete bipartite K_{2,b} with the terminals on the 2-side."""
    if b < 2:
        raise GraphError(f"branching must be at least 2, got {b}")
    mids = [f"m{i}" for i in range(1, b + 1)]
    edges = [(SOURCE, m) for m in mids] + [(m, SINK) for m in mids]
    return from_pattern(f"k2b({b})" if b != 2 else "c4", (SOURCE, *mids, SINK), edges)


def c4() -> StGraph:
    return k2b(2)


# ----------------------------------------------------------------------------
# slash product


def _graft(prefix: tuple[int, ...], w: VertexAddress) -> VertexAddress:
    return VertexAddress(prefix + w.edge_path[1:], w.role)


def oslash(h: StGraph, g: StGraph) -> StGraph:
    """Replace every edge ``(u, v)`` of ``h`` by a copy of ``g`` glued at ``u=s(g)``, ``v=t(g)``."""
    if h.source == h.sink or g.source == g.sink:
        raise GraphError("source equals sink")
    g_int = g.interior
    vertices = list(h.vertices)
    edges = []
    paths = []
    for (u, v), pe in zip(h.edges, h.edge_paths):
        local = {g.source: u, g.sink: v}
        for w in g_int:
            nw = _graft(pe, w)
            local[w] = nw
            vertices.append(nw)
        for (x, y), qe in zip(g.edges, g.edge_paths):
            edges.append((local[x], local[y]))
            paths.append(pe + qe[1:])
    return StGraph(tuple(vertices), tuple(edges), h.source, h.sink, tuple(paths), name=h.name or g.name)


class Level(NamedTuple):
    """Vertices created at one step of the left-iterated power.

    ``parent_src``/``parent_dst`` are row indices of the endpoints of each
    parent edge, ``new_rows[e, r]`` the row of the vertex with interior role
    ``r`` created on parent edge ``e``.
    """

    step: int
    parent_src: np.ndarray
    parent_dst: np.ndarray
    new_rows: np.ndarray


def expand_levels(base: StGraph, k: int) -> Iterator[Level]:
    """Yield the k expansion steps of ``base^k`` as integer arrays.

    Rows follow :func:`power`'s vertex order: source, sink, then each level's
    vertices edge-major, role-minor.
    """
    roles = [w for w in base.interior]
    n_int = len(roles)
    ridx = {w: i for i, w in enumerate(roles)}
    src = np.array([0], dtype=np.int64)
    dst = np.array([1], dtype=np.int64)
    offset = 2
    for step in range(1, k + 1):
        n_edges = len(src)
        new_rows = offset + np.arange(n_edges * n_int, dtype=np.int64).reshape(n_edges, n_int)
        yield Level(step, src, dst, new_rows)

        def endpoint(w):
            if w == base.source:
                return src
            if w == base.sink:
                return dst
            return new_rows[:, ridx[w]]

        cols_u = [endpoint(u) for u, _ in base.edges]
        cols_v = [endpoint(v) for _, v in base.edges]
        src = np.stack(cols_u, axis=1).reshape(-1)
        dst = np.stack(cols_v, axis=1).reshape(-1)
        offset += n_edges * n_int


def edge_path_of(e: int, level: int, n_base_edges: int) -> tuple[int, ...]:
    """Path of edge number ``e`` of ``G^level`` in canonical order."""
    digits = []
    for _ in range(level):
        e, r = divmod(e, n_base_edges)
        digits.append(r)
    return (0,) + tuple(reversed(digits))


def power(base: StGraph, k: int) -> StGraph:
    """``base^k`` by left iteration; ``power(base, 0)`` is the single edge."""
    if k < 0:
        raise GraphError("power must be nonnegative")
    if k == 0:
        return single_edge()
    roles = base.interior
    n_be = len(base.edges)
    vertices = [S_ADDR, T_ADDR]
    for lvl in expand_levels(base, k):
        for e in range(len(lvl.parent_src)):
            pe = edge_path_of(e, lvl.step - 1, n_be)
            vertices.extend(_graft(pe, w) for w in roles)
    src, dst = _final_edges(base, k)
    edges = tuple((vertices[u], vertices[v]) for u, v in zip(src.tolist(), dst.tolist()))
    paths = tuple(edge_path_of(e, k, n_be) for e in range(len(edges)))
    # slash powers of a valid base are valid by construction
    return StGraph(tuple(vertices), edges, S_ADDR, T_ADDR, paths, name=base.name, _validated=k <= 3)


def _final_edges(base: StGraph, k: int) -> tuple[np.ndarray, np.ndarray]:
    roles = base.interior
    ridx = {w: i for i, w in enumerate(roles)}
    last = None
    for last in expand_levels(base, k):
        pass

    def endpoint(w):
        if w == base.source:
            return last.parent_src
        if w == base.sink:
            return last.parent_dst
        return last.new_rows[:, ridx[w]]

    src = np.stack([endpoint(u) for u, _ in base.edges], axis=1).reshape(-1)
    dst = np.stack([endpoint(v) for _, v in base.edges], axis=1).reshape(-1)
    return src, dst


# ----------------------------------------------------------------------------
# copies


@dataclass(frozen=True)
class Copy:
    """One copy of ``G^j`` inside ``G^k``: the pattern vertices of its top level."""

    level: int
    path: tuple[int, ...]
    roles: tuple[str, ...]
    addresses: tuple[VertexAddress, ...]

    def __getitem__(self, role: str) -> VertexAddress:
        return self.addresses[self.roles.index(role)]


def pattern_roles(base: StGraph) -> tuple[str, ...]:
    return (SOURCE,) + tuple(w.role for w in base.interior) + (SINK,)


def copy_rows(base: StGraph, k: int) -> dict[int, np.ndarray]:
    """Row-index form of :func:`copies_at_level` for every level at once.

    ``out[j]`` has shape ``(n_copies, len(pattern_roles(base)))``.
    """
    out = {}
    for lvl in expand_levels(base, k):
        j = k - lvl.step + 1
        out[j] = np.column_stack([lvl.parent_src, lvl.new_rows, lvl.parent_dst])
    return out


def copies_at_level(base: StGraph, k: int, j: int) -> list[Copy]:
    """The ``|E(base)|^(k-j)`` copies of ``base^j`` in ``base^k``."""
    if not 1 <= j <= k:
        raise GraphError(f"level {j} out of range [1, {k}]")
    step = k - j + 1
    g_parent = power(base, step - 1)
    roles = pattern_roles(base)
    out = []
    for (u, v), pe in zip(g_parent.edges, g_parent.edge_paths):
        addrs = (u,) + tuple(_graft(pe, w) for w in base.interior) + (v,)
        out.append(Copy(j, pe, roles, addrs))
    return out


def copy_vertices(g: StGraph, copy: Copy) -> list[VertexAddress]:
    """All vertices of ``g`` belonging to the copy (its terminals included)."""
    p = copy.path
    inside = [v for v in g.vertices if v.edge_path[: len(p)] == p]
    return [copy["s"], copy["t"]] + inside


# ----------------------------------------------------------------------------
# metric


def graph_metric(g: StGraph) -> np.ndarray:
    """All-pairs shortest-path distances over undirected unit edges."""
    n = len(g.vertices)
    ea = g.edge_array()
    adj = coo_matrix((np.ones(len(ea)), (ea[:, 0], ea[:, 1])), shape=(n, n)).tocsr()
    d = shortest_path(adj, directed=False, unweighted=True)
    if np.isinf(d).any():
        raise GraphError("graph is disconnected")
    return d


def dumps(g: StGraph, base: str = "", k: int | None = None) -> str:
    return json.dumps(g.to_json(base, k), indent=1)
