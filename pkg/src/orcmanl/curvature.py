"""Unweighted Ollivier-Ricci curvature of graph edges.

For an edge ``(x, y)`` the neighbor measures are uniform on ``N(x) - {y}`` and
``N(y) - {x}``, every edge counts as length one, and

    kappa(x, y) = 1 - W1(mu_x, mu_y)

with ``W1`` computed exactly by integer min-cost flow.  Values lie in
``[-2, 1]``; an edge with an empty reduced neighborhood is indeterminate and is
stored as NaN.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

from ._transport import orc_unit_kernel, transport_flow
from .graph import MetricMode, NeighborGraph, distances_from

__all__ = [
    "NeighborMeasure",
    "CurvatureMap",
    "transport_cost",
    "wasserstein1",
    "orc_edge",
    "orc_all",
]


@dataclass(frozen=True)
class NeighborMeasure:
    """Discrete probability measure with rational masses ``counts / counts.sum()``."""

    atoms: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=np.int64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if atoms.shape != counts.shape or atoms.ndim != 1:
            raise ValueError("atoms and counts must be matching 1-D arrays")
        if atoms.size == 0:
            raise ValueError("a measure needs at least one atom")
        if np.unique(atoms).size != atoms.size:
            raise ValueError("atoms must be distinct")
        if np.any(counts <= 0):
            raise ValueError("atom masses must be positive")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def uniform(cls, atoms) -> "NeighborMeasure":
        atoms = np.asarray(atoms, dtype=np.int64)
        return cls(atoms, np.ones(atoms.size, dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def masses(self) -> np.ndarray:
        return self.counts / self.total

    def __len__(self) -> int:
        return int(self.atoms.size)


@dataclass(frozen=True)
class CurvatureMap:
    """Curvature per edge, aligned with ``graph.u`` / ``graph.v``; NaN marks indeterminate."""

    u: np.ndarray
    v: np.ndarray
    kappa: np.ndarray

    @property
    def determinate(self) -> np.ndarray:
        return ~np.isnan(self.kappa)

    def as_dict(self) -> dict[tuple[int, int], float | None]:
        return {
            (int(a), int(b)): (None if np.isnan(k) else float(k))
            for a, b, k in zip(self.u, self.v, self.kappa)
        }

    def __getitem__(self, edge: tuple[int, int]) -> float:
        a, b = sorted(map(int, edge))
        hit = np.flatnonzero((self.u == a) & (self.v == b))
        if hit.size == 0:
            raise KeyError(edge)
        return float(self.kappa[hit[0]])


def transport_cost(mu_counts, nu_counts, cost) -> float:
    """Exact optimal cost between rational measures given as positive integer counts.

    Masses are rescaled to the common denominator ``lcm(sum(mu), sum(nu))`` and the
    resulting integer transportation problem is solved as a min-cost flow.  Any
    infinite entry of ``cost`` is a forbidden route; if the plan cannot avoid them
    the cost is ``inf``.
    """
    mu_counts = np.asarray(mu_counts, dtype=np.int64)
    nu_counts = np.asarray(nu_counts, dtype=np.int64)
    cost = np.ascontiguousarray(cost, dtype=float)
    if cost.shape != (mu_counts.size, nu_counts.size):
        raise ValueError("cost matrix shape must be (len(mu), len(nu))")
    if np.any(np.isnan(cost)) or np.any(cost < 0):
        raise ValueError("ground costs must be nonnegative")
    tm, tn = int(mu_counts.sum()), int(nu_counts.sum())
    lcm = tm // gcd(tm, tn) * tn
    supply = mu_counts * (lcm // tm)
    demand = nu_counts * (lcm // tn)
    finite = cost[np.isfinite(cost)]
    scale = float(finite.max()) if finite.size else 1.0
    _, total = transport_flow(supply, demand, cost, 1e-12 * max(scale, 1.0))
    return total / lcm


def wasserstein1(mu: NeighborMeasure, nu: NeighborMeasure, ground) -> float:
    """1-Wasserstein distance between measures on vertices.

    ``ground`` is a square distance matrix indexed by vertex id (dense array or
    anything supporting ``ground[np.ix_(rows, cols)]``).
    """
    cost = np.asarray(ground[np.ix_(mu.atoms, nu.atoms)], dtype=float)
    return transport_cost(mu.counts, nu.counts, cost)


def _reduced_neighborhoods(graph: NeighborGraph, x: int, y: int):
    nx_ = graph.neighbors(x)
    ny_ = graph.neighbors(y)
    return nx_[nx_ != y], ny_[ny_ != x]


def orc_edge(graph: NeighborGraph, edge: tuple[int, int]) -> float:
    """Curvature of one edge by explicit hop-distance BFS and the general solver.

    Slower than :func:`orc_all`; kept as an independent route for checking it.
    Returns NaN when a reduced neighborhood is empty.
    """
    x, y = map(int, edge)
    if y not in set(graph.neighbors(x).tolist()):
        raise KeyError(f"{edge} is not an edge of the graph")
    ax, ay = _reduced_neighborhoods(graph, x, y)
    if ax.size == 0 or ay.size == 0:
        return float("nan")
    hop = distances_from(graph, ax, MetricMode.UNIT)[:, ay]
    w = transport_cost(np.ones(ax.size, np.int64), np.ones(ay.size, np.int64), hop)
    if not np.isfinite(w):
        return -2.0
    return float(max(-2.0, 1.0 - w))


def orc_all(graph: NeighborGraph) -> CurvatureMap:
    """Curvature for every edge of ``graph`` (order matches ``graph.u``/``graph.v``)."""
    indptr, indices, _ = graph.csr
    kappa = orc_unit_kernel(indptr, indices, graph.u, graph.v, graph.n_vertices)
    return CurvatureMap(graph.u, graph.v, kappa)
