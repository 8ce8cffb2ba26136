"""Point clouds indexed by vertex addresses, their substructure index, and JSON I/O."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .graph import VertexAddress, edge_path_of
from .norms import format_exponent, lp_norm, parse_exponent


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Finite set of vectors keyed by :class:`VertexAddress`.

    Distances use the l_p norm with exponent ``norm``; ``weight`` multiplies
    every coordinate's p-th power, which turns cell values of a dyadic step
    function into its exact L_p norm.
    """

    addresses: tuple[VertexAddress, ...]
    coords: np.ndarray
    norm: float
    kind: str = "points"
    params: dict = field(default_factory=dict)
    weight: float = 1.0

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float)
        if coords.ndim != 2 or len(coords) != len(self.addresses):
            raise ValueError("coords must be an (n_points, dim) array aligned with addresses")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    def __len__(self):
        return len(self.addresses)

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def epsilon(self) -> float:
        return self.params["epsilon"]

    @cached_property
    def row(self) -> dict[VertexAddress, int]:
        return {a: i for i, a in enumerate(self.addresses)}

    def point(self, addr: VertexAddress | str) -> np.ndarray:
        if isinstance(addr, str):
            addr = VertexAddress.parse(addr)
        return self.coords[self.row[addr]]

    def distance(self, a, b) -> float:
        return float(lp_norm(self.point(a) - self.point(b), self.norm, weight=self.weight))

    def pair_distances(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        return lp_norm(self.coords[i] - self.coords[j], self.norm, weight=self.weight)

    def with_coords(self, coords: np.ndarray) -> "PointCloud":
        return replace(self, coords=coords)

    def scaled(self, factor: float) -> "PointCloud":
        return replace(self, coords=self.coords * factor)


@dataclass(frozen=True, eq=False)
class SubstructureIndex:
    """Rows of each copy's pattern vertices, per level.

    ``levels[j]`` has one row per copy of the level-``j`` sub-pattern, columns
    ordered as ``roles`` (source first, sink last).
    """

    roles: tuple[str, ...]
    levels: dict[int, np.ndarray]
    k: int
    n_base_edges: int

    def copies(self, j: int) -> np.ndarray:
        if j not in self.levels:
            raise ValueError(f"level {j} out of range [1, {self.k}]")
        return self.levels[j]

    def col(self, role: str) -> int:
        return self.roles.index(role)

    def copy_path(self, j: int, c: int) -> tuple[int, ...]:
        return edge_path_of(c, self.k - j, self.n_base_edges)

    def n_copies(self) -> dict[int, int]:
        return {j: len(rows) for j, rows in self.levels.items()}


# ----------------------------------------------------------------------------
# JSON


def _finite(v):
    return format_exponent(v) if isinstance(v, float) and math.isinf(v) else v


def cloud_to_json(cloud: PointCloud, index: SubstructureIndex | None = None) -> dict:
    doc = {"kind": cloud.kind}
    doc.update({k: _finite(v) for k, v in cloud.params.items()})
    exp_key = "p" if cloud.kind == "diamond" else "q"
    doc[exp_key] = format_exponent(cloud.norm)
    doc["dim"] = cloud.dim
    if cloud.weight != 1.0:
        doc["mesh"] = cloud.params.get("mesh", cloud.weight)
        doc["weight"] = cloud.weight
    doc["points"] = {str(a): [float(x) for x in row] for a, row in zip(cloud.addresses, cloud.coords)}
    if index is not None:
        addrs = cloud.addresses
        doc["index"] = {
            "roles": list(index.roles),
            "k": index.k,
            "n_base_edges": index.n_base_edges,
            "levels": {
                str(j): [[str(addrs[r]) for r in row] for row in rows.tolist()]
                for j, rows in sorted(index.levels.items())
            },
        }
    return doc


def cloud_from_json(doc: dict) -> tuple[PointCloud, SubstructureIndex | None]:
    kind = doc.get("kind", "points")
    exp_key = "p" if kind == "diamond" else "q"
    norm = parse_exponent(doc.get(exp_key, 2.0))
    addresses = tuple(VertexAddress.parse(a) for a in doc["points"])
    coords = np.array(list(doc["points"].values()), dtype=float).reshape(len(addresses), -1)
    skip = {"kind", exp_key, "dim", "points", "index", "weight"}
    params = {k: v for k, v in doc.items() if k not in skip}
    cloud = PointCloud(addresses, coords, norm, kind, params, float(doc.get("weight", 1.0)))
    index = None
    if "index" in doc:
        ix = doc["index"]
        row = cloud.row
        levels = {
            int(j): np.array([[row[VertexAddress.parse(a)] for a in copy] for copy in copies], dtype=np.int64)
            for j, copies in ix["levels"].items()
        }
        index = SubstructureIndex(tuple(ix["roles"]), levels, int(ix["k"]), int(ix["n_base_edges"]))
    return cloud, index


def save_cloud(path, cloud: PointCloud, index: SubstructureIndex | None = None) -> None:
    Path(path).write_text(json.dumps(cloud_to_json(cloud, index), separators=(",", ":")))


def load_cloud(path) -> tuple[PointCloud, SubstructureIndex | None]:
    return cloud_from_json(json.loads(Path(path).read_text()))
