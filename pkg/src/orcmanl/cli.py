"""Command-line front end.

Every command writes its outputs plus ``<output>.manifest.json`` recording the
argument vector, the resolved configuration and the tool version, so
``orcmanl replay <manifest>`` regenerates the same bytes.

Exit codes: 0 success, 1 I/O or runtime failure, 2 invalid configuration.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .curvature import orc_all
from .errors import InvalidConfig, OrcManlError
from .evaluation import (EvalReport, ablation_sweep, positive_orc_sweep, pruning_report,
                         sigma_convergence_sweep)
from .graph import build_eps_graph, build_knn_graph
from .io import (load_fixture, read_edges_csv, read_json, read_points_csv, write_edges_csv,
                 write_json, write_points_csv)
from .prune import (PruneConfig, bisection_prune, density_prune, distance_prune, mst_prune,
                    orc_only_prune, orcmanl_prune)
from .synth import (GeodesicReference, ManifoldSpec, NoiseModel, PAPER_NOISE, dense_reference,
                    label_edges, sample_manifold)

METHODS = ("orcmanl", "orc-only", "bisection", "mst", "density", "distance")


class _IOFailure(Exception):
    pass


# ---------------------------------------------------------------- config

def _load_config(args) -> dict:
    cfg: dict = {}
    if getattr(args, "fixture", None):
        cfg = load_fixture(args.fixture)
    if getattr(args, "config", None):
        cfg = _merge(cfg, read_json(_existing(args.config)))
    if getattr(args, "family", None):
        cfg.setdefault("manifold", {})["family"] = args.family
        cfg["manifold"].setdefault("shape_params", {})
    return cfg


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for key, val in over.items():
        out[key] = _merge(out[key], val) if isinstance(val, dict) and isinstance(out.get(key), dict) else val
    return out


def _spec(cfg: dict) -> ManifoldSpec:
    man = cfg.get("manifold")
    if not man or "family" not in man:
        raise InvalidConfig("config needs manifold.family (use --config, --fixture or --family)")
    return ManifoldSpec(man["family"], man.get("shape_params", {}))


def _noise(cfg: dict, spec: ManifoldSpec, tau=None, sigma=None) -> NoiseModel:
    noise = cfg.get("noise")
    if noise is None:
        noise = dict(zip(("tau", "sigma"), PAPER_NOISE.get(spec.family, (0.0, 0.0))))
    return NoiseModel(float(noise["tau"] if tau is None else tau),
                      float(noise["sigma"] if sigma is None else sigma))


def _reference(cfg: dict, spec: ManifoldSpec, n_ref=None) -> GeodesicReference:
    ref = cfg.get("reference", {})
    if n_ref is None:
        n_ref = ref.get("n_ref", 20_000 if spec.intrinsic_dim == 1 else 150_000)
    return GeodesicReference(dense_reference(spec, int(n_ref), int(ref.get("seed", 1234))))


def _existing(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise _IOFailure(f"no such file: {path}")
    return p


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _seed_list(text: str) -> list[int]:
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise InvalidConfig("--seeds is empty")
    return seeds


def _write_manifest(args, argv, cfg, outputs, inputs, started, seed=None):
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "config": cfg,
        "seed": seed,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "tool_version": __version__,
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    write_json(manifest, f"{outputs[0]}.manifest.json")


def _graph_from(args, cloud, cfg):
    if args.k is not None and args.eps is not None:
        raise InvalidConfig("--k and --eps are mutually exclusive")
    if args.eps is not None:
        return build_eps_graph(cloud, args.eps), {"eps": args.eps}
    k = args.k if args.k is not None else int(cfg.get("graph", {}).get("k", 20))
    return build_knn_graph(cloud, k), {"k": k}


# ---------------------------------------------------------------- commands

def cmd_generate(args, argv):
    started = time.perf_counter()
    cfg = _load_config(args)
    spec = _spec(cfg)
    noise = _noise(cfg, spec, args.tau, args.sigma)
    sampling = cfg.get("sampling", {})
    n = args.n if args.n is not None else int(sampling.get("n", 4000))
    seed = args.seed if args.seed is not None else int(sampling.get("seed", 0))
    cloud = sample_manifold(spec, noise, n, seed)
    write_points_csv(cloud, args.out)
    resolved = {"manifold": spec.to_dict(), "noise": {"tau": noise.tau, "sigma": noise.sigma},
                "sampling": {"n": n, "seed": seed}}
    _write_manifest(args, argv, resolved, [args.out], [], started, seed)


def cmd_build_graph(args, argv):
    started = time.perf_counter()
    cfg = _load_config(args)
    cloud = read_points_csv(_existing(args.points))
    graph, gcfg = _graph_from(args, cloud, cfg)
    labels = None
    resolved = {"graph": gcfg}
    if args.label:
        spec = _spec(cfg)
        ref = _reference(cfg, spec, args.n_ref)
        ratio = float(cfg.get("reference", {}).get("ratio_threshold", 3.0))
        labels = label_edges(graph, cloud, ref, ratio).shortcut
        resolved.update(manifold=spec.to_dict(), reference={"n_ref": ref.cloud.n, "ratio_threshold": ratio})
    write_edges_csv(graph, args.out, labels=labels)
    _write_manifest(args, argv, resolved, [args.out], [args.points], started)


def cmd_curvature(args, argv):
    started = time.perf_counter()
    n = read_points_csv(_existing(args.points)).n if args.points else None
    graph, extras = read_edges_csv(_existing(args.edges), n)
    kappa = orc_all(graph).kappa
    write_edges_csv(graph, args.out, labels=extras.get("shortcut"), kappa=kappa)
    inputs = [args.edges] + ([args.points] if args.points else [])
    _write_manifest(args, argv, {}, [args.out], inputs, started)


def _method_params(method: str, args, cfg: dict) -> dict:
    key = method.replace("-", "_")
    params = dict(cfg.get(key, {}))
    flag_map = {
        "orcmanl": {"delta": "delta", "lambda": "lam", "eps_policy": "eps_policy", "eps": "eps_value",
                    "beta": "beta"},
        "orc_only": {"delta": "delta"},
        "bisection": {"k_bis": "k_bis"},
        "mst": {"d_mst": "d_mst"},
        "density": {"rho_min": "rho_min", "bandwidth": "bandwidth"},
        "distance": {"d_dist": "d_dist"},
    }[key]
    for name, attr in flag_map.items():
        val = getattr(args, attr, None)
        if val is not None:
            params[name] = val
    return params


def _run_prune(method, graph, cloud, params, kappa=None):
    def curv():
        from .curvature import CurvatureMap
        if kappa is not None:
            return CurvatureMap(graph.u, graph.v, kappa)
        return orc_all(graph)

    def need(name):
        if name not in params:
            raise InvalidConfig(f"method {method} needs parameter {name!r} (flag or config)")
        return params[name]

    if method == "orcmanl":
        return orcmanl_prune(graph, curv(), PruneConfig.from_dict(params))
    if method == "orc-only":
        return orc_only_prune(graph, curv(), float(params.get("delta", 0.8)))
    if method == "bisection":
        return bisection_prune(graph, cloud, int(params.get("k_bis", 10)))
    if method == "mst":
        return mst_prune(graph, float(need("d_mst")))
    if method == "density":
        bw = params.get("bandwidth")
        return density_prune(graph, cloud, float(need("rho_min")), None if bw is None else float(bw))
    if method == "distance":
        return distance_prune(graph, float(need("d_dist")))
    raise InvalidConfig(f"unknown method {method!r}")


def cmd_prune(args, argv):
    started = time.perf_counter()
    cfg = _load_config(args)
    cloud = read_points_csv(_existing(args.points))
    inputs = [args.points]
    kappa = None
    if args.edges:
        graph, extras = read_edges_csv(_existing(args.edges), cloud.n)
        kappa = extras.get("kappa")
        inputs.append(args.edges)
        gcfg = {"edges": str(args.edges)}
    else:
        graph, gcfg = _graph_from(args, cloud, cfg)
    params = _method_params(args.method, args, cfg)
    result = _run_prune(args.method, graph, cloud, params, kappa)
    write_edges_csv(result.pruned_graph(), args.out)
    audit_path = f"{args.out}.audit.json"
    write_json(result.to_json_dict(), audit_path)
    _write_manifest(args, argv, {"graph": gcfg, "method": args.method, "params": result.params},
                    [args.out, audit_path], inputs, started)


def cmd_evaluate(args, argv):
    started = time.perf_counter()
    cfg = _load_config(args)
    n = None
    cloud = None
    if args.points:
        cloud = read_points_csv(_existing(args.points))
        n = cloud.n
    graph, extras = read_edges_csv(_existing(args.edges), n)
    pruned, _ = read_edges_csv(_existing(args.pruned), graph.n_vertices)
    if "shortcut" in extras:
        shortcut = extras["shortcut"]
    else:
        if cloud is None:
            raise InvalidConfig("unlabeled edge file: pass --points and a manifold config to label it")
        spec = _spec(cfg)
        ratio = float(cfg.get("reference", {}).get("ratio_threshold", 3.0))
        shortcut = label_edges(graph, cloud, _reference(cfg, spec, args.n_ref), ratio).shortcut
    kept = set(map(tuple, pruned.edge_pairs().tolist()))
    pairs = graph.edge_pairs().tolist()
    if not kept <= set(map(tuple, pairs)):
        raise InvalidConfig("pruned edge file contains edges absent from the original graph")
    removed = np.array([tuple(p) not in kept for p in pairs], dtype=bool)
    report = EvalReport(int((~shortcut).sum()), int(shortcut.sum()),
                        int((removed & ~shortcut).sum()), int((removed & shortcut).sum()))
    Path(args.out).write_text(report.to_csv())
    json_path = f"{args.out}.json"
    Path(json_path).write_text(report.to_json() + "\n")
    inputs = [args.edges, args.pruned] + ([args.points] if args.points else [])
    _write_manifest(args, argv, {}, [args.out, json_path], inputs, started)


def cmd_sweep(args, argv):
    started = time.perf_counter()
    cfg = _load_config(args)
    spec = _spec(cfg)
    seeds = _seed_list(args.seeds)
    lists = {name: _float_list(getattr(args, name)) for name in ("sigma", "tau", "n", "k", "delta", "lam")
             if getattr(args, name) is not None}
    swept = ["sigma"] if "sigma" in lists else []
    swept += [name for name in ("n", "k", "delta", "lam") if len(lists.get(name, [])) > 1]
    if len(swept) != 1:
        raise InvalidConfig("a sweep varies exactly one of --sigma or --n/--k/--delta/--lambda "
                            f"given as a list (got {swept or 'none'})")
    if "tau" in lists and swept != ["sigma"]:
        raise InvalidConfig("--tau only applies to a --sigma sweep")
    kind = swept[0]
    ref = _reference(cfg, spec, args.n_ref)
    scalar = {name: vals[0] for name, vals in lists.items() if len(vals) == 1}
    if kind == "sigma":
        sig = lists["sigma"]
        tau = lists.get("tau", [_noise(cfg, spec).tau])
        if len(tau) == 1:
            tau = tau * len(sig)
        n = int(scalar.get("n", cfg.get("sampling", {}).get("n", 4000)))
        k = int(scalar.get("k", cfg.get("graph", {}).get("k", 20)))
        table = sigma_convergence_sweep(spec, tau, sig, n, k, seeds, ref, args.workers)
        resolved = {"tau": tau, "sigma": sig, "n": n, "k": k}
    elif kind == "n":
        ns = [int(x) for x in lists["n"]]
        k = int(scalar.get("k", 5))
        noise = _noise(cfg, spec)
        table = positive_orc_sweep(spec, noise, ns, k, seeds, eps=args.eps, graph_k=args.graph_k,
                                   reference=ref, workers=args.workers)
        resolved = {"n": ns, "k": k, "eps": args.eps, "graph_k": args.graph_k,
                    "noise": {"tau": noise.tau, "sigma": noise.sigma}}
    else:
        param = {"lam": "lambda"}.get(kind, kind)
        values = lists[kind]
        if kind == "k":
            values = [int(v) for v in values]
        if any(name in scalar for name in ("k", "delta", "lam")):
            raise InvalidConfig("an ablation holds the other parameters at k=20, delta=0.8, lambda=0.01")
        n = int(scalar.get("n", cfg.get("sampling", {}).get("n", 4000)))
        noise = _noise(cfg, spec)
        table = ablation_sweep(spec, noise, param, values, seeds, n, ref, args.workers)
        resolved = {"param": param, "values": values, "n": n,
                    "noise": {"tau": noise.tau, "sigma": noise.sigma}}
    if args.metrics:
        keep = set(args.metrics.split(","))
        table.rows = [r for r in table.rows if r[2] in keep]
    Path(args.out).write_text(table.to_csv())
    json_path = f"{args.out}.json"
    Path(json_path).write_text(table.to_json() + "\n")
    resolved.update(manifold=spec.to_dict(), seeds=seeds, n_ref=ref.cloud.n)
    _write_manifest(args, argv, resolved, [args.out, json_path], [], started)


def cmd_replay(args, argv):
    manifest = read_json(_existing(args.manifest))
    if manifest.get("command") == "replay" or "argv" not in manifest:
        raise InvalidConfig("not a replayable manifest")
    return main(manifest["argv"])


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orcmanl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"orcmanl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def config_flags(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--fixture", help="bundled config name, e.g. concentric_circles")
        p.add_argument("--family", help="manifold family (overrides the config's)")

    p = sub.add_parser("generate", help="sample a noisy point cloud")
    config_flags(p)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("build-graph", help="kNN or eps-radius graph from a point CSV")
    config_flags(p)
    p.add_argument("points")
    p.add_argument("--k", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--label", action="store_true", help="add ground-truth shortcut labels")
    p.add_argument("--n-ref", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("curvature", help="add a kappa column to an edge CSV")
    p.add_argument("edges")
    p.add_argument("--points")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("prune", help="prune a graph with ORC-ManL or a baseline")
    config_flags(p)
    p.add_argument("points")
    p.add_argument("--edges", help="edge CSV (default: build a kNN graph)")
    p.add_argument("--method", choices=METHODS, default="orcmanl")
    p.add_argument("--k", type=int)
    p.add_argument("--eps", type=float, help="eps-radius graph instead of kNN")
    p.add_argument("--delta", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--eps-policy", choices=["per_edge_weight", "fixed_epsilon", "max_edge_weight"])
    p.add_argument("--eps-value", type=float, help="epsilon for the fixed_epsilon policy")
    p.add_argument("--beta", type=float)
    p.add_argument("--k-bis", type=int)
    p.add_argument("--d-mst", type=float)
    p.add_argument("--rho-min", type=float)
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--d-dist", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("evaluate", help="score a pruned edge list against shortcut labels")
    config_flags(p)
    p.add_argument("--edges", required=True, help="original edge CSV (labeled, or pass --points)")
    p.add_argument("--pruned", required=True)
    p.add_argument("--points")
    p.add_argument("--n-ref", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="convergence sweeps and parameter ablations")
    config_flags(p)
    p.add_argument("--seeds", default="0-9", help="e.g. 0-9 or 0,3,5")
    p.add_argument("--sigma", help="comma list: sigma convergence sweep")
    p.add_argument("--tau", help="comma list (or one value) paired with --sigma")
    p.add_argument("--n", help="comma list: positive-curvature sweep; one value sets n")
    p.add_argument("--k", help="one value, or a comma list for a k ablation")
    p.add_argument("--delta", help="comma list: delta ablation")
    p.add_argument("--lambda", dest="lam", help="comma list: lambda ablation")
    p.add_argument("--eps", type=float, help="eps-radius graph for the --n sweep")
    p.add_argument("--graph-k", type=int, default=20, help="kNN k for the --n sweep without --eps")
    p.add_argument("--metrics", help="comma list of metrics to keep")
    p.add_argument("--n-ref", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        rc = args.func(args, argv)
        return int(rc or 0)
    except _IOFailure as exc:
        print(f"orcmanl: {exc}", file=sys.stderr)
        return 1
    except (InvalidConfig, ValueError, KeyError, TypeError) as exc:
        print(f"orcmanl: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except (OSError, OrcManlError) as exc:
        print(f"orcmanl: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
