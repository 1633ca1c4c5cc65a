"""File formats: point clouds, edge lists, experiment configs.

Floats are written with ``repr`` so files round-trip exactly and repeated runs
produce identical bytes.
"""
from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvalidConfig
from .graph import NeighborGraph
from .synth import PointCloud

__all__ = [
    "write_points_csv",
    "read_points_csv",
    "write_edges_csv",
    "read_edges_csv",
    "write_json",
    "read_json",
    "load_fixture",
    "fixture_names",
]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_points_csv(cloud: PointCloud, path) -> None:
    d = cloud.points.shape[1]
    header = [f"x{i}" for i in range(d)] + [f"bx{i}" for i in range(d)] + ["component"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for p, b, c in zip(cloud.points, cloud.base_points, cloud.component_id):
            writer.writerow([*map(_fmt, p), *map(_fmt, b), int(c)])


def read_points_csv(path) -> PointCloud:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InvalidConfig(f"{path}: empty point file")
    header = rows[0]
    d = sum(1 for h in header if h.startswith("x"))
    expected = [f"x{i}" for i in range(d)] + [f"bx{i}" for i in range(d)] + ["component"]
    if header != expected:
        raise InvalidConfig(f"{path}: unexpected header {header}")
    data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float).reshape(-1, 2 * d + 1)
    return PointCloud(data[:, :d], data[:, d:2 * d], data[:, -1].astype(np.int64))


def write_edges_csv(graph: NeighborGraph, path, labels=None, kappa=None) -> None:
    """Edge list ``u,v,weight[,label][,kappa]``; NaN curvature is an empty field."""
    header = ["u", "v", "weight"]
    if labels is not None:
        header.append("label")
    if kappa is not None:
        kappa = np.asarray(kappa, dtype=float)
        header.append("kappa")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for e in range(graph.n_edges):
            row = [int(graph.u[e]), int(graph.v[e]), _fmt(graph.weight[e])]
            if labels is not None:
                row.append("shortcut" if labels[e] else "good")
            if kappa is not None:
                row.append("" if math.isnan(kappa[e]) else _fmt(kappa[e]))
            writer.writerow(row)


def read_edges_csv(path, n_vertices: int | None = None) -> tuple[NeighborGraph, dict[str, np.ndarray]]:
    """Read an edge list; returns the graph and any extra columns aligned with its edges.

    ``label`` comes back as a boolean shortcut mask and ``kappa`` as floats with
    NaN for empty fields.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or reader.fieldnames[:3] != ["u", "v", "weight"]:
            raise InvalidConfig(f"{path}: edge files start with u,v,weight")
        rows = list(reader)
    u = np.array([int(r["u"]) for r in rows], dtype=np.int64)
    v = np.array([int(r["v"]) for r in rows], dtype=np.int64)
    w = np.array([float(r["weight"]) for r in rows], dtype=float)
    if n_vertices is None:
        n_vertices = int(max(u.max(initial=-1), v.max(initial=-1)) + 1)
    graph = NeighborGraph.from_edges(n_vertices, u, v, w)
    # from_edges sorts edges; carry extra columns through the same order
    key = {(min(a, b), max(a, b)): i for i, (a, b) in enumerate(zip(u, v))}
    order = np.array([key[(int(a), int(b))] for a, b in zip(graph.u, graph.v)], dtype=np.int64)
    extras: dict[str, np.ndarray] = {}
    fields = reader.fieldnames
    if "label" in fields:
        lab = np.array([r["label"] for r in rows])
        if not np.all(np.isin(lab, ["good", "shortcut"])):
            raise InvalidConfig(f"{path}: labels must be 'good' or 'shortcut'")
        extras["shortcut"] = (lab == "shortcut")[order]
    if "kappa" in fields:
        extras["kappa"] = np.array([float(r["kappa"]) if r["kappa"] != "" else np.nan
                                    for r in rows])[order]
    return graph, extras


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False)
        fh.write("\n")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: not valid JSON ({exc})") from None


def fixture_names() -> list[str]:
    root = resources.files("orcmanl") / "fixtures"
    return sorted(Path(p.name).stem for p in root.iterdir() if p.name.endswith(".json"))


def load_fixture(name: str) -> dict:
    """Bundled dataset config (manifold, noise, graph and baseline parameters)."""
    path = resources.files("orcmanl") / "fixtures" / f"{name}.json"
    if not path.is_file():
        raise InvalidConfig(f"no bundled fixture {name!r}; available: {fixture_names()}")
    return json.loads(path.read_text())
