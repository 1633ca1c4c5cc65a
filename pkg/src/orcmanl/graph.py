"""Neighbor graphs and the shortest-path, spanning-tree and component primitives.

Graphs are immutable.  Every edge is stored once as ``(u, v)`` with ``u < v`` and
carries its Euclidean length.  Queries take a metric mode: ``"weighted"`` uses the
stored lengths, ``"unit"`` treats every edge as length one without touching them.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

__all__ = [
    "MetricMode",
    "NeighborGraph",
    "DistanceResult",
    "build_knn_graph",
    "build_eps_graph",
    "shortest_path",
    "distances_from",
    "kruskal_mst",
    "connected_components",
]

ZERO_LENGTH_JITTER = 1e-12
_KDTREE_MIN_POINTS = 2048
_CHUNK_ENTRIES = 8_000_000


class MetricMode(str, enum.Enum):
    WEIGHTED = "weighted"
    UNIT = "unit"


def _coords(cloud) -> np.ndarray:
    points = getattr(cloud, "points", cloud)
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.ndim != 2:
        raise ValueError("expected an (n, D) coordinate array")
    return points


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    """Undirected graph on ``n_vertices`` vertices with positive edge weights.

    Use :meth:`from_edges` to build one; it canonicalises orientation and order.
    """

    n_vertices: int
    u: np.ndarray
    v: np.ndarray
    weight: np.ndarray

    @classmethod
    def from_edges(cls, n_vertices: int, u, v, weight=None) -> "NeighborGraph":
        u = np.asarray(u, dtype=np.int64).ravel()
        v = np.asarray(v, dtype=np.int64).ravel()
        if u.shape != v.shape:
            raise ValueError("u and v must have the same length")
        if weight is None:
            weight = np.ones(u.shape[0])
        weight = np.asarray(weight, dtype=float).ravel()
        if weight.shape != u.shape:
            raise ValueError("one weight per edge is required")
        if u.size and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= n_vertices):
            raise ValueError("edge endpoint outside the vertex range")
        if np.any(u == v):
            raise ValueError("self-loops are not allowed")
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        order = np.lexsort((hi, lo))
        lo, hi, weight = lo[order], hi[order], weight[order]
        if lo.size > 1 and np.any((lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])):
            raise ValueError("duplicate edges are not allowed")
        if np.any(~np.isfinite(weight)) or np.any(weight <= 0):
            raise ValueError("edge weights must be finite and strictly positive")
        for arr in (lo, hi, weight):
            arr.setflags(write=False)
        return cls(int(n_vertices), lo, hi, weight)

    @property
    def n_edges(self) -> int:
        return int(self.u.shape[0])

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(a), int(b), float(w)) for a, b, w in zip(self.u, self.v, self.weight)]

    def edge_pairs(self) -> np.ndarray:
        return np.column_stack([self.u, self.v])

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric adjacency as ``(indptr, indices, edge_id)``, neighbors sorted."""
        n = self.n_vertices
        src = np.concatenate([self.u, self.v])
        dst = np.concatenate([self.v, self.u])
        eid = np.concatenate([np.arange(self.n_edges)] * 2)
        order = np.lexsort((dst, src))
        src, dst, eid = src[order], dst[order], eid[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        return indptr, dst.astype(np.int64), eid.astype(np.int64)

    @cached_property
    def degree(self) -> np.ndarray:
        indptr = self.csr[0]
        return np.diff(indptr)

    def neighbors(self, vertex: int) -> np.ndarray:
        indptr, indices, _ = self.csr
        return indices[indptr[vertex]:indptr[vertex + 1]]

    def adjacency(self, mode: MetricMode | str = MetricMode.WEIGHTED) -> sp.csr_matrix:
        mode = MetricMode(mode)
        data = self.weight if mode is MetricMode.WEIGHTED else np.ones(self.n_edges)
        n = self.n_vertices
        mat = sp.coo_matrix(
            (np.concatenate([data, data]),
             (np.concatenate([self.u, self.v]), np.concatenate([self.v, self.u]))),
            shape=(n, n),
        )
        return mat.tocsr()

    def edge_index(self) -> dict[tuple[int, int], int]:
        return {(int(a), int(b)): i for i, (a, b) in enumerate(zip(self.u, self.v))}

    def subgraph(self, keep: np.ndarray) -> "NeighborGraph":
        """Graph on the same vertices holding the edges selected by a mask or index array."""
        keep = np.asarray(keep)
        if keep.dtype == bool:
            keep = np.flatnonzero(keep)
        return NeighborGraph.from_edges(self.n_vertices, self.u[keep], self.v[keep], self.weight[keep])

    def scaled(self, factor: float) -> "NeighborGraph":
        return NeighborGraph.from_edges(self.n_vertices, self.u, self.v, self.weight * factor)


@dataclass(frozen=True)
class DistanceResult:
    source: int
    dist: np.ndarray


def _edge_weights(points: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    w = np.sqrt(((points[u] - points[v]) ** 2).sum(axis=1))
    zero = np.flatnonzero(w == 0)
    # duplicate samples: deterministic positive length keeps Dijkstra/OT well posed
    w[zero] = ZERO_LENGTH_JITTER * (1 + zero)
    return w


def _row_blocks(n_rows: int, n_cols: int):
    step = max(1, _CHUNK_ENTRIES // max(n_cols, 1))
    for start in range(0, n_rows, step):
        yield start, min(n_rows, start + step)


def _sq_dists(block: np.ndarray, points: np.ndarray) -> np.ndarray:
    d2 = np.zeros((block.shape[0], points.shape[0]))
    for dim in range(points.shape[1]):
        d2 += (block[:, dim, None] - points[None, :, dim]) ** 2
    return d2


def _knn_brute(points: np.ndarray, k: int, rows: np.ndarray | None = None) -> np.ndarray:
    n = points.shape[0]
    rows = np.arange(n) if rows is None else rows
    out = np.empty((rows.size, k), dtype=np.int64)
    for start, stop in _row_blocks(rows.size, n):
        idx = rows[start:stop]
        d2 = _sq_dists(points[idx], points)
        d2[np.arange(idx.size), idx] = np.inf
        kth = np.partition(d2, k - 1, axis=1)[:, k - 1]
        for r in range(idx.size):
            cand = np.flatnonzero(d2[r] <= kth[r])
            if cand.size > k:
                cand = cand[np.argsort(d2[r, cand], kind="stable")[:k]]
            out[start + r] = cand
    return out


def _knn_kdtree(points: np.ndarray, k: int) -> np.ndarray:
    n = points.shape[0]
    tree = cKDTree(points)
    m = min(n, k + 2)
    dist, idx = tree.query(points, k=m)
    out = np.empty((n, k), dtype=np.int64)
    fallback = []
    for r in range(n):
        keep = idx[r] != r
        d_r, i_r = dist[r][keep], idx[r][keep]
        # the first k are exactly the kNN set unless the boundary is a tie
        if d_r.size > k and not d_r[k - 1] < d_r[k]:
            fallback.append(r)
            continue
        out[r] = i_r[:k]
    if fallback:
        rows = np.asarray(fallback, dtype=np.int64)
        out[rows] = _knn_brute(points, k, rows)
    return out


def build_knn_graph(cloud, k: int, method: str = "auto") -> NeighborGraph:
    """Symmetric k-nearest-neighbor graph: ``(a, b)`` is an edge if either is in the other's kNN.

    Ties at the k-th distance go to the lower vertex index.  ``method`` is ``"brute"``,
    ``"kdtree"`` or ``"auto"``; the tree path falls back to brute force on boundary ties.
    """
    points = _coords(cloud)
    n = points.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n (got k={k}, n={n})")
    if method == "auto":
        method = "kdtree" if n >= _KDTREE_MIN_POINTS else "brute"
    if method == "brute":
        nbrs = _knn_brute(points, k)
    elif method == "kdtree":
        nbrs = _knn_kdtree(points, k)
    else:
        raise ValueError(f"unknown neighbor search method {method!r}")
    a = np.repeat(np.arange(n, dtype=np.int64), k)
    b = nbrs.ravel()
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    pairs = np.unique(lo * n + hi)
    u, v = pairs // n, pairs % n
    return NeighborGraph.from_edges(n, u, v, _edge_weights(points, u, v))


def build_eps_graph(cloud, eps: float) -> NeighborGraph:
    """Edge between every pair at Euclidean distance at most ``eps``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    points = _coords(cloud)
    n = points.shape[0]
    us, vs = [], []
    for start, stop in _row_blocks(n, n):
        d2 = _sq_dists(points[start:stop], points)
        rr, cc = np.nonzero(d2 <= eps * eps)
        rr = rr + start
        keep = cc > rr
        us.append(rr[keep])
        vs.append(cc[keep])
    u = np.concatenate(us).astype(np.int64) if us else np.empty(0, np.int64)
    v = np.concatenate(vs).astype(np.int64) if vs else np.empty(0, np.int64)
    return NeighborGraph.from_edges(n, u, v, _edge_weights(points, u, v))


def distances_from(graph: NeighborGraph, sources, mode: MetricMode | str = MetricMode.WEIGHTED,
                   limit: float = np.inf) -> np.ndarray:
    """Shortest-path distances from each source, shape ``(len(sources), n)``.

    Distances beyond ``limit`` come back as ``inf``.
    """
    mode = MetricMode(mode)
    sources = np.atleast_1d(np.asarray(sources, dtype=np.int64))
    mat = graph.adjacency(mode)
    return csgraph.dijkstra(mat, directed=False, indices=sources, limit=limit,
                            unweighted=mode is MetricMode.UNIT)


def shortest_path(graph: NeighborGraph, source: int,
                  mode: MetricMode | str = MetricMode.WEIGHTED) -> DistanceResult:
    if not 0 <= source < graph.n_vertices:
        raise ValueError("source vertex out of range")
    return DistanceResult(int(source), distances_from(graph, [source], mode)[0])


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = np.arange(n)
        self.rank = np.zeros(n, dtype=np.int64)

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return int(root)

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def kruskal_mst(graph: NeighborGraph) -> np.ndarray:
    """Indices of a minimum spanning forest, scanning edges by ``(weight, u, v)``."""
    order = np.lexsort((graph.v, graph.u, graph.weight))
    dsu = _DisjointSet(graph.n_vertices)
    chosen = [int(e) for e in order if dsu.union(int(graph.u[e]), int(graph.v[e]))]
    return np.sort(np.asarray(chosen, dtype=np.int64))


def connected_components(graph: NeighborGraph) -> np.ndarray:
    """Component id per vertex, numbered by each component's smallest vertex."""
    _, raw = csgraph.connected_components(graph.adjacency(), directed=False)
    _, first = np.unique(raw, return_index=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(first.size)
    return rank[raw]
