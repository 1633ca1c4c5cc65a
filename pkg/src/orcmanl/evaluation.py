"""Scoring pruners against ground-truth labels, and the convergence experiments.

Sweeps return a :class:`SweepTable` of long-format rows
``(value, seed, metric, metric_value)``.  Each (value, seed) job draws its own
sample, builds its own graph and curvature pass, so jobs are independent and
can be fanned out over processes; rows are always merged in schedule order.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .curvature import orc_all
from .errors import InvalidConfig, InvalidLabels
from .graph import NeighborGraph, build_eps_graph, build_knn_graph, connected_components, distances_from
from .prune import PruneConfig, PruneResult, orcmanl_prune
from .synth import (GeodesicReference, ManifoldSpec, NoiseModel, dense_reference, label_edges,
                    sample_manifold)

__all__ = [
    "EvalReport",
    "SweepTable",
    "pruning_report",
    "default_reference",
    "sigma_convergence_sweep",
    "positive_orc_sweep",
    "ablation_sweep",
    "mle_intrinsic_dimension",
    "adjusted_rand_index",
    "component_ari",
]

UNIT_KAPPA = 1.0 - 1e-9


@dataclass(frozen=True)
class EvalReport:
    """Percentages of good and shortcut edges removed, with the counts behind them."""

    good_total: int
    shortcut_total: int
    good_removed: int
    shortcut_removed: int

    @staticmethod
    def _pct(part: int, whole: int) -> float:
        return 100.0 * part / whole if whole else 0.0

    @property
    def pct_good_removed(self) -> float:
        return self._pct(self.good_removed, self.good_total)

    @property
    def pct_shortcut_removed(self) -> float:
        return self._pct(self.shortcut_removed, self.shortcut_total)

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return (self.good_total, self.shortcut_total, self.good_removed, self.shortcut_removed)

    COLUMNS = ("pct_good_removed", "pct_shortcut_removed",
               "good_total", "shortcut_total", "good_removed", "shortcut_removed")

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.COLUMNS}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        writer.writerow([repr(float(v)) if isinstance(v, float) else v
                         for v in self.to_dict().values()])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def pooled(cls, reports: Iterable["EvalReport"]) -> "EvalReport":
        """Sum counts over several runs (e.g. seeds) into one report."""
        tot = np.zeros(4, dtype=np.int64)
        for rep in reports:
            tot += np.asarray(rep.counts, dtype=np.int64)
        return cls(*map(int, tot))


@dataclass
class SweepTable:
    """Long-format sweep results; one row per (swept value, seed, metric)."""

    param: str
    rows: list[tuple[float, int, str, float]] = field(default_factory=list)

    COLUMNS = ("value", "seed", "metric", "metric_value")

    def add(self, value, seed, metric, metric_value):
        metric_value = float(metric_value)
        if math.isnan(metric_value):
            raise ValueError(f"NaN metric {metric!r} at {self.param}={value}, seed={seed}")
        self.rows.append((float(value), int(seed), str(metric), metric_value))

    def extend(self, other: "SweepTable"):
        self.rows.extend(other.rows)

    @property
    def metrics(self) -> list[str]:
        return sorted({r[2] for r in self.rows})

    def values(self, metric: str) -> list[tuple[float, int, float]]:
        return [(v, s, x) for v, s, m, x in self.rows if m == metric]

    def mean_by_value(self, metric: str) -> dict[float, float]:
        """Mean of ``metric`` over seeds for each swept value, in first-seen order."""
        groups: dict[float, list[float]] = {}
        for v, _, x in self.values(metric):
            groups.setdefault(v, []).append(x)
        return {v: float(np.mean(xs)) for v, xs in groups.items()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow((self.param,) + self.COLUMNS[1:])
        for v, s, m, x in self.rows:
            writer.writerow([repr(v), s, m, repr(x)])
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        return {"param": self.param,
                "columns": list(self.COLUMNS),
                "rows": [list(r) for r in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def from_json_dict(cls, data: dict) -> "SweepTable":
        return cls(data["param"], [(float(v), int(s), str(m), float(x)) for v, s, m, x in data["rows"]])


def pruning_report(result: PruneResult, labels) -> EvalReport:
    """Score a pruning result against edge labels aligned with the same graph."""
    g = result.graph
    if (labels.u.shape != g.u.shape or not np.array_equal(labels.u, g.u)
            or not np.array_equal(labels.v, g.v)):
        raise InvalidLabels("labels do not cover the pruned graph's edges in order")
    sc = np.asarray(labels.shortcut, dtype=bool)
    rm = result.removed_mask
    return EvalReport(int((~sc).sum()), int(sc.sum()), int((rm & ~sc).sum()), int((rm & sc).sum()))


def default_reference(spec: ManifoldSpec, seed: int = 1234, n_ref: int | None = None) -> GeodesicReference:
    """Dense labeling reference: 20k points for curves, 150k for surfaces by default."""
    if n_ref is None:
        n_ref = 20_000 if spec.intrinsic_dim == 1 else 150_000
    return GeodesicReference(dense_reference(spec, n_ref, seed))


def _check_monotone(schedule, increasing: bool, name: str):
    arr = np.asarray(schedule, dtype=float)
    if arr.size == 0:
        raise InvalidConfig(f"{name} must be nonempty")
    steps = np.diff(arr)
    if np.any(steps <= 0 if increasing else steps >= 0):
        raise InvalidConfig(f"{name} must be strictly {'increasing' if increasing else 'decreasing'}")


def _run_jobs(fn, jobs: list[tuple], workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


def _sigma_job(spec, tau, sigma, n, k, seed, reference):
    cloud = sample_manifold(spec, NoiseModel(tau, sigma), n, seed)
    graph = build_knn_graph(cloud, k)
    labels = label_edges(graph, cloud, reference)
    kappa = orc_all(graph).kappa[labels.shortcut]
    kappa = kappa[~np.isnan(kappa)]
    return labels.n_shortcut, (float(kappa.mean()) if kappa.size else None)


def sigma_convergence_sweep(spec: ManifoldSpec, tau_schedule: Sequence[float],
                            sigma_schedule: Sequence[float], n: int, k: int,
                            seeds: Iterable[int], reference: GeodesicReference | None = None,
                            workers: int = 1) -> SweepTable:
    """Mean curvature of shortcut edges as the noise shrinks.

    Level ``i`` samples with ``NoiseModel(tau_schedule[i], sigma_schedule[i])``.
    Every (level, seed) gets a ``shortcut_count`` row; ``mean_shortcut_kappa``
    is added only when there is at least one determinate shortcut edge.
    """
    if len(tau_schedule) != len(sigma_schedule):
        raise InvalidConfig("tau and sigma schedules must have equal length")
    _check_monotone(sigma_schedule, False, "sigma_schedule")
    if np.any(np.diff(np.asarray(tau_schedule, dtype=float)) > 0):
        raise InvalidConfig("tau_schedule must be non-increasing")
    reference = reference if reference is not None else default_reference(spec)
    seeds = list(seeds)
    jobs = [(spec, float(t), float(s), n, k, seed, reference)
            for t, s in zip(tau_schedule, sigma_schedule) for seed in seeds]
    table = SweepTable("sigma")
    for job, (count, mean) in zip(jobs, _run_jobs(_sigma_job, jobs, workers)):
        sigma, seed = job[2], job[5]
        table.add(sigma, seed, "shortcut_count", count)
        if mean is not None:
            table.add(sigma, seed, "mean_shortcut_kappa", mean)
    return table


def _positive_job(spec, noise, n, k, seed, eps, graph_k, reference):
    cloud = sample_manifold(spec, noise, n, seed)
    graph = build_eps_graph(cloud, eps) if eps is not None else build_knn_graph(cloud, graph_k)
    labels = label_edges(graph, cloud, reference)
    kappa = np.nan_to_num(orc_all(graph).kappa, nan=-np.inf)
    out = []
    for bar in (0.0, None):
        good = ~labels.shortcut & ((kappa > bar) if bar is not None else (kappa >= UNIT_KAPPA))
        hits = np.bincount(graph.u[good], minlength=n) + np.bincount(graph.v[good], minlength=n)
        out.append(100.0 * float(np.mean(hits >= k)))
    return out


def positive_orc_sweep(spec: ManifoldSpec, noise: NoiseModel, n_schedule: Sequence[int], k: int,
                       seeds: Iterable[int], eps: float | None = None, graph_k: int = 20,
                       reference: GeodesicReference | None = None, workers: int = 1) -> SweepTable:
    """Percent of vertices with at least ``k`` non-shortcut incident edges of positive curvature.

    The graph is an ``eps``-radius graph when ``eps`` is given (the setting in
    which neighborhoods densify as ``n`` grows) and a ``graph_k``-NN graph
    otherwise.  Two metrics per (n, seed): ``pct_positive`` counts edges with
    ``kappa > 0`` and ``pct_unit`` those with ``kappa >= 1 - 1e-9``.
    Indeterminate curvature counts as non-positive.
    """
    _check_monotone(n_schedule, True, "n_schedule")
    if k < 0:
        raise InvalidConfig("k must be nonnegative")
    reference = reference if reference is not None else default_reference(spec)
    seeds = list(seeds)
    jobs = [(spec, noise, int(n), k, seed, eps, graph_k, reference) for n in n_schedule for seed in seeds]
    table = SweepTable("n")
    for job, (pos, unit) in zip(jobs, _run_jobs(_positive_job, jobs, workers)):
        table.add(job[2], job[4], "pct_positive", pos)
        table.add(job[2], job[4], "pct_unit", unit)
    return table


ABLATION_DEFAULTS = {"k": 20, "delta": 0.8, "lambda": 0.01}


def _ablation_job(spec, noise, n, param, values, seed, reference):
    cloud = sample_manifold(spec, noise, n, seed)
    rows = []
    cached = None
    for value in values:
        setting = dict(ABLATION_DEFAULTS, **{param: value})
        k = int(setting["k"])
        if cached is None or cached[0] != k:
            graph = build_knn_graph(cloud, k)
            cached = (k, graph, orc_all(graph), label_edges(graph, cloud, reference))
        _, graph, curv, labels = cached
        result = orcmanl_prune(graph, curv, PruneConfig(delta=setting["delta"], lam=setting["lambda"]))
        rep = pruning_report(result, labels)
        rows.append((value, rep.pct_good_removed, rep.pct_shortcut_removed))
    return rows


def ablation_sweep(spec: ManifoldSpec, noise: NoiseModel, param: str, values: Sequence[float],
                   seeds: Iterable[int], n: int = 4000, reference: GeodesicReference | None = None,
                   workers: int = 1) -> SweepTable:
    """Vary one of ``k``, ``delta``, ``lambda`` with the others at 20, 0.8, 0.01.

    One row per (value, seed) for each of ``pct_good_removed`` and
    ``pct_shortcut_removed``.
    """
    if param not in ABLATION_DEFAULTS:
        raise InvalidConfig(f"ablation parameter must be one of {sorted(ABLATION_DEFAULTS)}")
    if len(values) == 0:
        raise InvalidConfig("ablation needs at least one value")
    reference = reference if reference is not None else default_reference(spec)
    seeds = list(seeds)
    jobs = [(spec, noise, n, param, list(values), seed, reference) for seed in seeds]
    table = SweepTable(param)
    for seed, rows in zip(seeds, _run_jobs(_ablation_job, jobs, workers)):
        for value, good, short in rows:
            table.add(value, seed, "pct_good_removed", good)
            table.add(value, seed, "pct_shortcut_removed", short)
    return table


def mle_from_distances(t: np.ndarray) -> np.ndarray:
    """Rowwise MLE ``[1/(k-1) sum_j log(T_k / T_j)]^-1`` from sorted neighbor distances.

    Rows containing non-finite entries, or whose log-sum is zero, give NaN.
    """
    t = np.atleast_2d(np.asarray(t, dtype=float))
    if t.shape[1] < 2:
        raise InvalidConfig("the estimator needs k >= 2")
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log(t[:, -1:] / t[:, :-1]).sum(axis=1) / (t.shape[1] - 1)
        est = 1.0 / logs
    est[~np.all(np.isfinite(t), axis=1) | ~(logs > 0) | ~np.isfinite(est)] = np.nan
    return est


def mle_intrinsic_dimension(graph: NeighborGraph, k: int, chunk: int = 256) -> np.ndarray:
    """Pointwise intrinsic-dimension estimates using graph-metric neighbor distances.

    Vertices with fewer than ``k`` reachable neighbors, or with degenerate
    spacing, are NaN.  Invariant to a uniform rescaling of the weights.
    """
    if k < 2:
        raise InvalidConfig("the estimator needs k >= 2")
    n = graph.n_vertices
    out = np.full(n, np.nan)
    if n <= k:
        return out
    for start in range(0, n, chunk):
        src = np.arange(start, min(start + chunk, n))
        d = distances_from(graph, src)
        d[np.arange(src.size), src] = np.inf
        t = np.sort(np.partition(d, k - 1, axis=1)[:, :k], axis=1)
        out[src] = mle_from_distances(t)
    return out


def _comb2(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float((x * (x - 1) / 2).sum())


def adjusted_rand_index(a, b) -> float:
    """Adjusted Rand index of two flat labelings, from the pair-counting contingency table."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        raise InvalidLabels("labelings must have equal length")
    if a.size < 2:
        raise InvalidLabels("ARI needs at least two items")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    index = _comb2(table)
    sa, sb = _comb2(table.sum(axis=1)), _comb2(table.sum(axis=0))
    expected = sa * sb / _comb2(np.array([a.size]))
    best = 0.5 * (sa + sb)
    if best == expected:
        return 1.0
    return float((index - expected) / (best - expected))


def component_ari(graph: NeighborGraph, component_id) -> float:
    """ARI between the graph's connected components and ground-truth components."""
    return adjusted_rand_index(connected_components(graph), component_id)
