"""Embedding measurement and the contraction audits.

Audits pair an embedding with a modulus model.  The underlying statements
are theorems, so a failed audit never refutes them: it means the model
claims more convexity than the target actually has (or the embedding's
measured constants were not fed in consistently).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._kernels import extreme_ratios
from .bounds import LowerBound
from .checks import root_sum
from .cloud import PointCloud, SubstructureIndex
from .graph import VertexAddress
from .laakso import designated_pairs
from .moduli import Family, ModulusModel
from .norms import lp_norm, parse_exponent

AUDIT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EmbeddingMap:
    """Image of every domain point, rows aligned with ``domain.addresses``.

    Distances in the target use ``target_norm``, unless ``target_dist`` holds
    a full custom distance matrix.
    """

    domain: PointCloud
    image: np.ndarray | None
    target_norm: float = 2.0
    target_weight: float = 1.0
    target_dist: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        if self.image is None and self.target_dist is None:
            raise ValueError("need an image or a target distance matrix")
        if self.image is not None:
            img = np.array(self.image, dtype=float)
            if img.ndim != 2 or len(img) != len(self.domain):
                raise ValueError("image must have one row per domain point")
            object.__setattr__(self, "image", img)
        if self.target_dist is not None and self.target_dist.shape != (len(self.domain),) * 2:
            raise ValueError("target distance matrix does not match the domain")

    def image_distances(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        if self.target_dist is not None:
            return self.target_dist[i, j]
        return lp_norm(self.image[i] - self.image[j], self.target_norm, weight=self.target_weight)

    def domain_distances(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        return self.domain.pair_distances(i, j)

    def ratios(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        return self.image_distances(i, j) / self.domain_distances(i, j)

    def scaled(self, factor: float) -> "EmbeddingMap":
        if self.target_dist is not None:
            return replace(self, target_dist=self.target_dist * factor)
        return replace(self, image=self.image * factor)

    def then(self, linear: np.ndarray, name: str = "") -> "EmbeddingMap":
        """Compose with the linear map ``v -> v @ linear``."""
        return replace(self, image=self.image @ linear, name=name or self.name)


def identity(cloud: PointCloud) -> EmbeddingMap:
    return EmbeddingMap(cloud, cloud.coords, cloud.norm, cloud.weight, name="identity")


def formal_identity(cloud: PointCloud, target_norm=2.0) -> EmbeddingMap:
    """Same coordinates, measured with a different l_p norm."""
    return EmbeddingMap(cloud, cloud.coords, parse_exponent(target_norm), cloud.weight,
                        name=f"identity->l{target_norm}")


def random_projection_embed(cloud: PointCloud, d: int, seed: int) -> EmbeddingMap:
    """Seeded projection onto a random orthonormal d-frame, scaled by ``sqrt(dim/d)``, into l_2^d."""
    if d < 1:
        raise ValueError("target dimension must be positive")
    if d > cloud.dim:
        raise ValueError(f"target dimension {d} exceeds source dimension {cloud.dim}")
    rng = np.random.default_rng(seed)
    frame, r = np.linalg.qr(rng.standard_normal((cloud.dim, d)))
    frame = frame * np.sign(np.diag(r))
    img = cloud.coords @ frame * math.sqrt(cloud.dim / d)
    return EmbeddingMap(cloud, img, 2.0, cloud.weight if cloud.kind == "diamond" else 1.0,
                        name=f"randproj:{d}:{seed}")


def load_map(cloud: PointCloud, path, target_norm=2.0) -> EmbeddingMap:
    """Read ``{"points": {addr: [floats]}, "norm": p}`` (norm optional)."""
    doc = json.loads(Path(path).read_text())
    pts = doc.get("points", doc)
    row = {VertexAddress.parse(a): v for a, v in pts.items()}
    missing = [str(a) for a in cloud.addresses if a not in row]
    if missing:
        raise ValueError(f"map file lacks {len(missing)} domain points, e.g. {missing[0]}")
    img = np.array([row[a] for a in cloud.addresses], dtype=float)
    norm = parse_exponent(doc.get("norm", target_norm)) if isinstance(doc, dict) else target_norm
    return EmbeddingMap(cloud, img, norm, name=str(path))


# ----------------------------------------------------------------------------
# distortion


@dataclass
class EmbeddingReport:
    lip: float
    colip: float
    distortion: float
    lip_pair: tuple[int, int]
    colip_pair: tuple[int, int]
    level_ratios: dict[int, float] = field(default_factory=dict)
    bound: LowerBound | None = None

    @property
    def margin(self) -> float | None:
        """Measured distortion minus the bound's ``D_min``."""
        return None if self.bound is None else self.distortion - self.bound.d_min

    def summary(self) -> dict:
        out = {
            "lip": self.lip,
            "colip": self.colip,
            "distortion": self.distortion,
            "D_j": [self.level_ratios[j] for j in sorted(self.level_ratios)],
        }
        if self.bound is not None:
            out["bound"] = self.bound.d_min
            out["margin"] = self.margin
        return out


def measure_distortion(f: EmbeddingMap) -> EmbeddingReport:
    """Lipschitz constants of ``f`` and of its inverse over all pairs of domain points."""
    n = len(f.domain)
    if n < 2:
        raise ValueError("need at least two domain points")
    if f.target_dist is None:
        hi, hi_j, lo, lo_j = extreme_ratios(
            np.ascontiguousarray(f.domain.coords), np.ascontiguousarray(f.image),
            float(f.domain.norm), float(f.domain.weight), float(f.target_norm), float(f.target_weight))
    else:
        hi, hi_j = np.full(n, -np.inf), np.full(n, -1)
        lo, lo_j = np.full(n, np.inf), np.full(n, -1)
        for i in range(n - 1):
            j = np.arange(i + 1, n)
            r = f.ratios(np.full(len(j), i), j)
            hi[i], hi_j[i] = r.max(), j[r.argmax()]
            lo[i], lo_j[i] = r.min(), j[r.argmin()]
    a, b = int(np.argmax(hi)), int(np.argmin(lo))
    lip, colip = float(hi[a]), float(lo[b])
    dist = lip / colip if colip > 0 else math.inf
    return EmbeddingReport(lip, colip, dist, (a, int(hi_j[a])), (b, int(lo_j[b])))


def measure_level_ratios(f: EmbeddingMap, index: SubstructureIndex, colip: float | None = None) -> dict[int, float]:
    """``D_j``: largest colip-normalized ratio over the level-``j`` designated pairs."""
    if colip is None:
        colip = measure_distortion(f).colip
    if not colip > 0:
        raise ValueError("map is not injective on the domain; D_j undefined")
    out = {}
    for j in sorted(index.levels):
        pr = designated_pairs(index, j)
        if len(pr) == 0:
            raise ValueError(f"no designated pairs at level {j}")
        out[j] = float(f.ratios(pr[:, 0], pr[:, 1]).max() / colip)
    return out


def embedding_report(f: EmbeddingMap, index: SubstructureIndex | None = None,
                     bound: LowerBound | None = None) -> EmbeddingReport:
    rep = measure_distortion(f)
    if index is not None and rep.colip > 0 and set(index.roles) >= {"m1", "m2"}:
        rep.level_ratios = measure_level_ratios(f, index, rep.colip)
    rep.bound = bound
    return rep


# ----------------------------------------------------------------------------
# contraction audits


@dataclass
class ContractionAudit:
    family: str
    model: str
    distortion: float
    level: np.ndarray
    copy: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    note: str = ""

    @property
    def margin(self) -> np.ndarray:
        return (self.rhs - self.lhs) / self.rhs

    @property
    def failed(self) -> np.ndarray:
        return self.lhs > self.rhs * (1 + AUDIT_TOL)

    @property
    def n_failures(self) -> int:
        return int(self.failed.sum())

    @property
    def passed(self) -> bool:
        return self.n_failures == 0

    def failures(self) -> list[tuple[int, int, float]]:
        idx = np.flatnonzero(self.failed)
        return [(int(self.level[i]), int(self.copy[i]), float(self.margin[i])) for i in idx]

    def rows(self):
        for i in range(len(self.lhs)):
            yield int(self.level[i]), int(self.copy[i]), float(self.lhs[i]), float(self.rhs[i]), float(self.margin[i])


def _thin_params(f: EmbeddingMap) -> tuple[float, float]:
    return f.domain.epsilon, f.domain.norm


def _audit(f, index, family, model, dist, rhs_factor, note):
    levels, copies, lhs, rhs = [], [], [], []
    s, t = index.col("s"), index.col("t")
    for j, rows in sorted(index.levels.items()):
        d_st = f.domain_distances(rows[:, s], rows[:, t])
        img = f.image_distances(rows[:, s], rows[:, t])
        levels.append(np.full(len(rows), j))
        copies.append(np.arange(len(rows)))
        lhs.append(img)
        rhs.append(rhs_factor * d_st)
    return ContractionAudit(family, model, dist, np.concatenate(levels), np.concatenate(copies),
                            np.concatenate(lhs), np.concatenate(rhs), note)


def _describe(model: ModulusModel) -> str:
    return f"{model.family.value}:{model.provenance}:c={model.constant:.6g}:p={model.power_type:g}"


def contraction_check_uc(f: EmbeddingMap, index: SubstructureIndex, model: ModulusModel,
                         report: EmbeddingReport | None = None) -> ContractionAudit:
    """Per copy: ``|f(s)-f(t)| <= D d(s,t) R (1 - delta(2 eps / (D R)))`` with ``R = (1+eps^q)^(1/q)``.

    ``f`` is normalized to co-Lipschitz constant 1 first and ``D`` is its
    measured distortion.
    """
    if model.family is not Family.UC:
        raise ValueError("uniform-convexity audit needs a UC model")
    report = report or measure_distortion(f)
    eps, q = _thin_params(f)
    D = report.distortion
    R = root_sum(eps, q)
    factor = D * R * (1.0 - float(model(2.0 * eps / (D * R))))
    g = f.scaled(1.0 / report.colip)
    return _audit(g, index, "uc", _describe(model), D, factor,
                  "failure means the model overstates the target's uniform convexity")


def contraction_check_rb(f: EmbeddingMap, index: SubstructureIndex, model: ModulusModel,
                         report: EmbeddingReport | None = None) -> ContractionAudit:
    """Per copy: ``d(f(s),f(t)) <= B d(s,t) R (1 - eta(eps/(2AB))/2)``, ``1/A`` = colip, ``B`` = lip."""
    if model.family is not Family.ROUNDED_BALL:
        raise ValueError("rounded-ball audit needs a rounded-ball model")
    report = report or measure_distortion(f)
    eps, q = _thin_params(f)
    A, B = 1.0 / report.colip, report.lip
    R = root_sum(eps, q)
    factor = B * R * (1.0 - 0.5 * float(model(eps / (2.0 * A * B))))
    return _audit(f, index, "rb", _describe(model), report.distortion, factor,
                  "failure means the model overstates the target's rounded-ball modulus")


@dataclass
class EscapeReport:
    tau: float
    b: int
    level: np.ndarray
    copy: np.ndarray
    first_escape: np.ndarray

    @property
    def n_copies(self) -> int:
        return len(self.first_escape)

    @property
    def n_escaped(self) -> int:
        return int((self.first_escape > 0).sum())

    def rows(self):
        for i in range(self.n_copies):
            e = int(self.first_escape[i])
            yield int(self.level[i]), int(self.copy[i]), (e if e > 0 else "none")


def midpoint_escape_check(f: EmbeddingMap, index: SubstructureIndex, tau: float | None = None,
                          model: ModulusModel | None = None,
                          report: EmbeddingReport | None = None) -> EscapeReport:
    """Smallest branch ``j`` per copy with ``f(m_j)`` outside ``Mid(f(s), f(t), tau)``.

    With a model, ``tau = delta~(eps / (16 D)) / 4``.  ``first_escape`` is
    1-based; 0 means no branch among the ``b`` available escapes.
    """
    mids = [c for c, r in enumerate(index.roles) if r not in ("s", "t")]
    if tau is None:
        if model is None:
            raise ValueError("give tau or an AMUC model")
        if model.family is not Family.AMUC:
            raise ValueError("escape test needs an AMUC model")
        report = report or measure_distortion(f)
        tau = float(model(f.domain.epsilon / (16.0 * report.distortion))) / 4.0
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    s, t = index.col("s"), index.col("t")
    levels, copies, first = [], [], []
    for j, rows in sorted(index.levels.items()):
        radius = 0.5 * (1 + tau) * f.image_distances(rows[:, s], rows[:, t])
        esc = np.zeros(len(rows), dtype=np.int64)
        for n, c in enumerate(mids, start=1):
            far = np.maximum(f.image_distances(rows[:, c], rows[:, s]),
                             f.image_distances(rows[:, c], rows[:, t]))
            out = far > radius * (1 + 1e-12)
            esc = np.where((esc == 0) & out, n, esc)
        levels.append(np.full(len(rows), j))
        copies.append(np.arange(len(rows)))
        first.append(esc)
    return EscapeReport(tau, len(mids), np.concatenate(levels), np.concatenate(copies), np.concatenate(first))
