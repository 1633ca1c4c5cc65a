import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import graph_from_pairs
from orcmanl.curvature import CurvatureMap, orc_all
from orcmanl.errors import InvalidConfig
from orcmanl.graph import build_knn_graph, connected_components
from orcmanl.prune import (EpsPolicy, PruneConfig, bisection_prune, candidate_threshold,
                           density_prune, distance_prune, distance_threshold, gaussian_kde,
                           mst_prune, orc_only_prune, orcmanl_prune)

# pi (pi + 1) (1 - 0.01) / (2 sqrt(0.24)), evaluated independently to 17 digits
FACTOR_LAMBDA_001 = 13.146702412291503


def noisy_circles(seed, n=300, k=8):
    rng = np.random.default_rng(seed)
    t = rng.uniform(0, 2 * np.pi, n)
    r = np.where(rng.random(n) < 0.5, 1.0, 0.55) + rng.normal(0, 0.09, n)
    pts = np.c_[r * np.cos(t), r * np.sin(t)]
    g = build_knn_graph(pts, k)
    return pts, g, orc_all(g)


def test_candidate_threshold_values():
    assert candidate_threshold(1.0) == -1.0
    assert candidate_threshold(0.8) == pytest.approx(-0.2, abs=1e-12)
    assert candidate_threshold(0.0) == 3.0


def test_distance_threshold_values():
    assert distance_threshold(0.01, 1.0) == pytest.approx(FACTOR_LAMBDA_001, rel=1e-14)
    assert distance_threshold(0.01, 1.0) == pytest.approx(13.148, abs=2e-3)
    assert distance_threshold(1 - 1e-12, 1.0) < 1e-10
    assert distance_threshold(0.3, 2.0) == pytest.approx(2 * distance_threshold(0.3, 1.0))
    with pytest.raises(InvalidConfig):
        distance_threshold(0.0, 1.0)


@pytest.mark.parametrize("bad", [dict(delta=1.2), dict(lam=0.0), dict(lam=1.0), dict(beta=2.0),
                                 dict(eps_policy="fixed_epsilon")])
def test_config_validation(bad):
    with pytest.raises(InvalidConfig):
        PruneConfig(**bad)


def test_config_round_trip():
    cfg = PruneConfig(delta=0.7, lam=0.05, eps_policy=EpsPolicy.FIXED_EPSILON, eps=0.3)
    assert PruneConfig.from_dict(cfg.to_dict()) == cfg


def test_no_candidates_nothing_removed():
    k4 = graph_from_pairs(4, list(itertools.combinations(range(4), 2)), np.ones(6))
    res = orcmanl_prune(k4, orc_all(k4))
    assert res.removed.size == 0 and res.kept.size == 6


def test_barbell_long_bridge_removed():
    left = list(itertools.combinations(range(8), 2))
    right = [(a + 8, b + 8) for a, b in left]
    pairs = left + right + [(7, 8)]
    w = np.r_[np.ones(len(left) + len(right)), 10.0]
    g = graph_from_pairs(16, pairs, w)
    res = orcmanl_prune(g, orc_all(g))
    assert res.removed_pairs() == [(7, 8)]
    assert np.isinf(res.audit["d_gprime"][0])
    comp = connected_components(res.pruned_graph())
    assert np.unique(comp).size == 2


def test_orc_only_superset_and_delta_zero():
    _, g, cm = noisy_circles(0)
    manl = set(orcmanl_prune(g, cm).removed_pairs())
    only = set(orc_only_prune(g, cm).removed_pairs())
    assert manl <= only
    all_det = orc_only_prune(g, cm, delta=0.0)
    assert all_det.removed.size == int((~np.isnan(cm.kappa)).sum())


def test_misaligned_curvature_rejected():
    _, g, cm = noisy_circles(1)
    with pytest.raises(ValueError):
        orcmanl_prune(g, CurvatureMap(cm.u[::-1], cm.v[::-1], cm.kappa))


@given(st.integers(0, 500), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_candidate_monotone_in_delta(seed, d1, d2):
    _, g, cm = noisy_circles(seed)
    lo, hi = sorted((d1, d2))
    assert set(orc_only_prune(g, cm, hi).removed) <= set(orc_only_prune(g, cm, lo).removed)


@given(st.integers(0, 500), st.sampled_from([0.01, 0.05, 0.3]),
       st.sampled_from(list(EpsPolicy)))
def test_partition_and_audit(seed, lam, policy):
    _, g, cm = noisy_circles(seed)
    cfg = PruneConfig(lam=lam, eps_policy=policy, eps=0.1 if policy is EpsPolicy.FIXED_EPSILON else None)
    res = orcmanl_prune(g, cm, cfg)
    assert np.intersect1d(res.kept, res.removed).size == 0
    assert np.union1d(res.kept, res.removed).size == g.n_edges
    assert set(res.removed) <= set(res.candidates)
    removed = np.isin(res.candidates, res.removed)
    d, thr = res.audit["d_gprime"], res.audit["threshold"]
    assert np.all(d[removed] > thr[removed])
    assert np.all(d[~removed] <= thr[~removed])
    pruned = res.pruned_graph()
    assert pruned.n_vertices == g.n_vertices
    np.testing.assert_array_equal(pruned.weight, g.weight[res.kept])


def test_audit_distances_exact_on_kept_and_removed():
    from orcmanl.graph import distances_from
    _, g, cm = noisy_circles(3)
    res = orcmanl_prune(g, cm)
    filtered = g.subgraph(np.setdiff1d(np.arange(g.n_edges), res.candidates))
    full = distances_from(filtered, g.u[res.candidates])
    np.testing.assert_allclose(res.audit["d_gprime"], full[np.arange(res.candidates.size), g.v[res.candidates]])


@given(st.integers(0, 300), st.sampled_from([1e-3, 1.0, 1e3]))
def test_scale_invariance(seed, c):
    pts, g, cm = noisy_circles(seed)
    gs = build_knn_graph(c * pts, 8)
    res, res_s = orcmanl_prune(g, cm), orcmanl_prune(gs, orc_all(gs))
    np.testing.assert_array_equal(res.candidates, res_s.candidates)
    np.testing.assert_array_equal(res.removed, res_s.removed)


def test_deterministic_json():
    _, g, cm = noisy_circles(4)
    a, b = orcmanl_prune(g, cm).to_json(), orcmanl_prune(g, cm).to_json()
    assert a == b
    doc = json.loads(a)
    assert set(doc) >= {"config", "thresholds", "removed", "audit"}
    assert set(doc["audit"][0]) == {"u", "v", "kappa", "d_gprime", "threshold"}


def test_bisection_examples():
    pts = np.array([[0.0], [0.5], [1.0]])
    g = graph_from_pairs(3, [(0, 2)], [1.0])
    res = bisection_prune(g, pts, k_bis=1)
    assert res.removed_pairs() == [(0, 2)]
    lone = bisection_prune(graph_from_pairs(2, [(0, 1)], [1.0]), np.array([[0.0], [1.0]]), 1)
    assert lone.removed.size == 0
    far = np.array([[0.0], [0.5], [1.0], [100.0]])
    g2 = graph_from_pairs(4, [(0, 2), (0, 1)], [1.0, 0.5])
    assert bisection_prune(g2, far, 1).removed_pairs() == [(0, 2)]


def test_mst_hand_trace():
    # T = {01, 23, 12, 34}; T' = {04, 02, 13}; G'' drops only 24.
    pairs = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (0, 2), (1, 3), (2, 4)]
    w = [1.0, 2.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    g = graph_from_pairs(5, pairs, w)
    res = mst_prune(g, 2.5)
    assert sorted(res.removed_pairs()) == [(0, 2), (0, 4), (1, 3), (2, 4)]
    score = dict(zip(map(tuple, g.edge_pairs().tolist()), res.audit["score"]))
    assert score[(2, 4)] == 3.0 and score[(0, 2)] == 3.0 and score[(0, 1)] == 1.0


def test_mst_tree_extremes():
    g = graph_from_pairs(4, [(0, 1), (1, 2), (2, 3)], [1.0, 2.0, 3.0])
    assert mst_prune(g, 3.0).removed.size == 0
    assert mst_prune(g, 0.5).removed.size == 3


def test_kde_hand_formula():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    q = np.array([[0.5, 0.0], [0.0, 1.0]])
    h = 0.7
    want = [sum(math.exp(-((a - x) ** 2 + (b - y) ** 2) / (2 * h * h)) for x, y in pts)
            / (3 * 2 * math.pi * h * h) for a, b in q]
    np.testing.assert_allclose(gaussian_kde(pts, q, h), want, rtol=1e-14)


def test_density_extremes_and_default_bandwidth():
    pts, g, _ = noisy_circles(5)
    assert density_prune(g, pts, 0.0).removed.size == 0
    assert density_prune(g, pts, np.inf).removed.size == g.n_edges
    assert density_prune(g, pts, 0.1).params["bandwidth"] == pytest.approx(g.weight.mean())


def test_distance_prune():
    g = graph_from_pairs(4, [(0, 1), (1, 2), (2, 3)], [1.0, 2.0, 3.0])
    assert distance_prune(g, 2.0).removed_pairs() == [(2, 3)]
    assert distance_prune(g, 5.0).removed.size == 0
    assert distance_prune(g, 0.5).removed.size == 3


@pytest.mark.parametrize("call", [lambda g, p: bisection_prune(g, p, 0),
                                  lambda g, p: mst_prune(g, 0.0),
                                  lambda g, p: density_prune(g, p, -1.0),
                                  lambda g, p: distance_prune(g, 0.0)])
def test_baseline_validation(call):
    pts, g, _ = noisy_circles(6, n=50)
    with pytest.raises(InvalidConfig):
        call(g, pts)
