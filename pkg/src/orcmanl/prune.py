"""ORC-ManL edge pruning and the baseline pruners it is compared against.

ORC-ManL works in two stages.  Edges whose curvature is at most
``-1 + 4 (1 - delta)`` become candidates.  The candidates are then deleted all
at once to form a filtered graph ``G'``, and a candidate ``(x, y)`` is removed
for good only if the weighted distance between ``x`` and ``y`` in ``G'`` exceeds

    beta * pi (pi + 1) (1 - lambda) / (2 sqrt(24 lambda)) * eps.

``G'`` is built once; the distance checks do not see each other's outcome.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ._paths import bounded_pair_distances
from .curvature import CurvatureMap
from .errors import InvalidConfig
from .graph import NeighborGraph, _coords, connected_components, kruskal_mst

__all__ = [
    "EpsPolicy",
    "PruneConfig",
    "PruneResult",
    "candidate_threshold",
    "distance_threshold",
    "orcmanl_prune",
    "orc_only_prune",
    "bisection_prune",
    "mst_prune",
    "density_prune",
    "distance_prune",
]


class EpsPolicy(str, enum.Enum):
    PER_EDGE_WEIGHT = "per_edge_weight"
    FIXED_EPSILON = "fixed_epsilon"
    MAX_EDGE_WEIGHT = "max_edge_weight"


@dataclass(frozen=True)
class PruneConfig:
    delta: float = 0.8
    lam: float = 0.01
    eps_policy: EpsPolicy = EpsPolicy.PER_EDGE_WEIGHT
    eps: float | None = None
    beta: float = 1.0
    infinite_distance_removes: bool = True

    def __post_init__(self):
        object.__setattr__(self, "eps_policy", EpsPolicy(self.eps_policy))
        if not 0.0 <= self.delta <= 1.0:
            raise InvalidConfig(f"delta must lie in [0, 1], got {self.delta}")
        if not 0.0 < self.lam < 1.0:
            raise InvalidConfig(f"lambda must lie in (0, 1), got {self.lam}")
        if not 0.0 <= self.beta <= 1.0:
            raise InvalidConfig(f"beta must lie in [0, 1], got {self.beta}")
        if self.eps_policy is EpsPolicy.FIXED_EPSILON and not (self.eps is not None and self.eps > 0):
            raise InvalidConfig("fixed_epsilon policy needs a positive eps")

    def to_dict(self) -> dict:
        return {"delta": self.delta, "lambda": self.lam, "eps_policy": self.eps_policy.value,
                "eps": self.eps, "beta": self.beta,
                "infinite_distance_removes": self.infinite_distance_removes}

    @classmethod
    def from_dict(cls, data: dict) -> "PruneConfig":
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        return cls(**data)


@dataclass(eq=False)
class PruneResult:
    """Partition of a graph's edges into kept and removed, with a per-candidate audit.

    Edge sets are index arrays into the input graph's edge order.  ``audit`` holds
    one array per column, aligned with ``candidates``.
    """

    graph: NeighborGraph
    method: str
    params: dict
    kept: np.ndarray
    removed: np.ndarray
    candidates: np.ndarray
    audit: dict[str, np.ndarray] = field(default_factory=dict)
    thresholds: dict[str, float] = field(default_factory=dict)

    @property
    def removed_mask(self) -> np.ndarray:
        mask = np.zeros(self.graph.n_edges, dtype=bool)
        mask[self.removed] = True
        return mask

    def removed_pairs(self) -> list[tuple[int, int]]:
        return [(int(self.graph.u[e]), int(self.graph.v[e])) for e in self.removed]

    def kept_pairs(self) -> list[tuple[int, int]]:
        return [(int(self.graph.u[e]), int(self.graph.v[e])) for e in self.kept]

    def candidate_pairs(self) -> list[tuple[int, int]]:
        return [(int(self.graph.u[e]), int(self.graph.v[e])) for e in self.candidates]

    def pruned_graph(self) -> NeighborGraph:
        return self.graph.subgraph(self.kept)

    def audit_records(self) -> list[dict]:
        records = []
        for row, e in enumerate(self.candidates):
            rec = {"u": int(self.graph.u[e]), "v": int(self.graph.v[e])}
            for key, col in self.audit.items():
                val = float(col[row])
                rec[key] = None if math.isnan(val) else (val if math.isfinite(val) else "inf")
            records.append(rec)
        return records

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "config": self.params,
            "thresholds": self.thresholds,
            "n_edges": self.graph.n_edges,
            "removed": [list(p) for p in self.removed_pairs()],
            "audit": self.audit_records(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def _result(graph, method, params, removed_mask, candidates, audit, thresholds):
    return PruneResult(
        graph=graph,
        method=method,
        params=params,
        kept=np.flatnonzero(~removed_mask),
        removed=np.flatnonzero(removed_mask),
        candidates=np.asarray(candidates, dtype=np.int64),
        audit=audit,
        thresholds=thresholds,
    )


def candidate_threshold(delta: float) -> float:
    if not 0.0 <= delta <= 1.0:
        raise InvalidConfig(f"delta must lie in [0, 1], got {delta}")
    return -1.0 + 4.0 * (1.0 - delta)


def distance_threshold(lam: float, eps, beta: float = 1.0):
    """Filtered-graph distance above which a candidate is judged a shortcut."""
    if not 0.0 < lam < 1.0:
        raise InvalidConfig(f"lambda must lie in (0, 1), got {lam}")
    factor = beta * math.pi * (math.pi + 1.0) * (1.0 - lam) / (2.0 * math.sqrt(24.0 * lam))
    return factor * np.asarray(eps, dtype=float) if np.ndim(eps) else factor * float(eps)


def filtered_distances(graph: NeighborGraph, src: np.ndarray, dst: np.ndarray,
                       limit: np.ndarray) -> np.ndarray:
    """Exact weighted distances for each pair; bounded search first, full search only if needed."""
    dist = bounded_pair_distances(graph, src, dst, limit)
    over = np.flatnonzero(~np.isfinite(dist))
    if over.size:
        comp = connected_components(graph)
        linked = over[comp[src[over]] == comp[dst[over]]]
        if linked.size:
            dist[linked] = bounded_pair_distances(graph, src[linked], dst[linked],
                                           np.full(linked.size, np.inf))
    return dist


def _eps_values(graph: NeighborGraph, cand: np.ndarray, config: PruneConfig) -> np.ndarray:
    if config.eps_policy is EpsPolicy.PER_EDGE_WEIGHT:
        return graph.weight[cand].astype(float)
    if config.eps_policy is EpsPolicy.FIXED_EPSILON:
        return np.full(cand.size, float(config.eps))
    return np.full(cand.size, float(graph.weight.max()) if graph.n_edges else 0.0)


def _candidates(curvatures: CurvatureMap, graph: NeighborGraph, delta: float) -> np.ndarray:
    kappa = np.asarray(curvatures.kappa, dtype=float)
    if kappa.shape != (graph.n_edges,) or not (
            np.array_equal(curvatures.u, graph.u) and np.array_equal(curvatures.v, graph.v)):
        raise ValueError("curvature map does not cover the graph's edges")
    with np.errstate(invalid="ignore"):
        return np.flatnonzero(kappa <= candidate_threshold(delta))


def orcmanl_prune(graph: NeighborGraph, curvatures: CurvatureMap,
                  config: PruneConfig | None = None) -> PruneResult:
    config = config or PruneConfig()
    cand = _candidates(curvatures, graph, config.delta)
    keep_mask = np.ones(graph.n_edges, dtype=bool)
    keep_mask[cand] = False
    filtered = graph.subgraph(keep_mask)
    eps = _eps_values(graph, cand, config)
    thr = distance_threshold(config.lam, eps, config.beta)
    thr = np.atleast_1d(np.asarray(thr, dtype=float))
    src, dst = graph.u[cand], graph.v[cand]
    # bounded search suffices for the decision; the rest is for an exact audit
    d_gp = filtered_distances(filtered, src, dst, thr)
    infinite = ~np.isfinite(d_gp)
    remove = np.where(infinite, config.infinite_distance_removes, d_gp > thr)
    removed_mask = np.zeros(graph.n_edges, dtype=bool)
    removed_mask[cand[remove]] = True
    unit = float(distance_threshold(config.lam, 1.0, config.beta))
    return _result(
        graph, "orcmanl", config.to_dict(), removed_mask, cand,
        {"kappa": curvatures.kappa[cand].astype(float), "d_gprime": d_gp, "threshold": thr},
        {"candidate_kappa": candidate_threshold(config.delta), "distance_factor": unit},
    )


def orc_only_prune(graph: NeighborGraph, curvatures: CurvatureMap, delta: float = 0.8) -> PruneResult:
    """Remove every candidate; no distance validation."""
    cand = _candidates(curvatures, graph, delta)
    removed_mask = np.zeros(graph.n_edges, dtype=bool)
    removed_mask[cand] = True
    thr = candidate_threshold(delta)
    return _result(graph, "orc-only", {"delta": delta}, removed_mask, cand,
                   {"kappa": curvatures.kappa[cand].astype(float),
                    "threshold": np.full(cand.size, thr)},
                   {"candidate_kappa": thr})


def _all_edges_audit(graph, method, params, score, threshold, removed_mask):
    return _result(graph, method, params, removed_mask, np.arange(graph.n_edges),
                   {"score": np.asarray(score, dtype=float),
                    "threshold": np.broadcast_to(np.asarray(threshold, dtype=float),
                                                 (graph.n_edges,)).copy()},
                   {})


def bisection_prune(graph: NeighborGraph, cloud, k_bis: int = 10) -> PruneResult:
    """Remove an edge when some third point falls in the box around its midpoint.

    The box half-width is the mean distance of both endpoints to their ``k_bis``
    nearest neighbors.
    """
    if k_bis < 1:
        raise InvalidConfig("k_bis must be at least 1")
    points = _coords(cloud)
    n = points.shape[0]
    tree = cKDTree(points)
    kq = min(k_bis + 1, n)
    dist, _ = tree.query(points, k=kq)
    dist = np.atleast_2d(dist)
    knn_mean = dist[:, 1:].mean(axis=1) if kq > 1 else np.zeros(n)
    half = 0.5 * (knn_mean[graph.u] + knn_mean[graph.v])
    mid = 0.5 * (points[graph.u] + points[graph.v])
    inside = np.asarray(tree.query_ball_point(mid, r=half, p=np.inf, return_length=True))
    own = (np.abs(points[graph.u] - mid).max(axis=1) <= half).astype(int)
    own += (np.abs(points[graph.v] - mid).max(axis=1) <= half).astype(int)
    third = inside - own
    return _all_edges_audit(graph, "bisection", {"k_bis": k_bis}, third, 0.0, third > 0)


def mst_prune(graph: NeighborGraph, d_mst: float) -> PruneResult:
    """Remove edges whose endpoints are farther than ``d_mst`` in the union of two MSTs."""
    if not d_mst > 0:
        raise InvalidConfig("d_mst must be positive")
    first = kruskal_mst(graph)
    rest = np.ones(graph.n_edges, dtype=bool)
    rest[first] = False
    rest_idx = np.flatnonzero(rest)
    second = rest_idx[kruskal_mst(graph.subgraph(rest_idx))] if rest_idx.size else rest_idx
    union = graph.subgraph(np.union1d(first, second))
    d = filtered_distances(union, graph.u, graph.v, np.full(graph.n_edges, float(d_mst)))
    return _all_edges_audit(graph, "mst", {"d_mst": d_mst}, d, d_mst, d > d_mst)


def gaussian_kde(points: np.ndarray, queries: np.ndarray, bandwidth: float,
                 chunk_entries: int = 4_000_000) -> np.ndarray:
    """Gaussian kernel density estimate ``(1/n) sum_p N(q; p, h^2 I)`` at each query."""
    n, dim = points.shape
    norm = (2.0 * math.pi * bandwidth ** 2) ** (-dim / 2.0) / n
    out = np.empty(queries.shape[0])
    step = max(1, chunk_entries // max(n, 1))
    for start in range(0, queries.shape[0], step):
        q = queries[start:start + step]
        d2 = np.zeros((q.shape[0], n))
        for d in range(dim):
            d2 += (q[:, d, None] - points[None, :, d]) ** 2
        out[start:start + step] = norm * np.exp(-0.5 * d2 / bandwidth ** 2).sum(axis=1)
    return out


def density_prune(graph: NeighborGraph, cloud, rho_min: float,
                  bandwidth: float | None = None) -> PruneResult:
    """Remove edges whose midpoint density estimate is below ``rho_min``.

    The default bandwidth is the mean edge length of the graph.
    """
    if not rho_min >= 0:
        raise InvalidConfig("rho_min must be nonnegative")
    points = _coords(cloud)
    if bandwidth is None:
        bandwidth = float(graph.weight.mean()) if graph.n_edges else 1.0
    if not bandwidth > 0:
        raise InvalidConfig("bandwidth must be positive")
    mid = 0.5 * (points[graph.u] + points[graph.v])
    rho = gaussian_kde(points, mid, bandwidth)
    return _all_edges_audit(graph, "density", {"rho_min": rho_min, "bandwidth": bandwidth},
                            rho, rho_min, rho < rho_min)


def distance_prune(graph: NeighborGraph, d_dist: float) -> PruneResult:
    if not d_dist > 0:
        raise InvalidConfig("d_dist must be positive")
    return _all_edges_audit(graph, "distance", {"d_dist": d_dist}, graph.weight, d_dist,
                            graph.weight > d_dist)
