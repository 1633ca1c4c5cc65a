"""Bounded point-to-point Dijkstra for many (source, target) pairs.

Pairs are grouped by source.  Each search stops once every target of that
source is settled or the frontier passes the largest limit, and only the
vertices it touched are reset afterwards, so cost tracks the explored region
rather than the graph size.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _push(hk, hv, size, key, val):
    i = size
    hk[i] = key
    hv[i] = val
    while i > 0:
        p = (i - 1) >> 1
        if hk[p] <= hk[i]:
            break
        hk[p], hk[i] = hk[i], hk[p]
        hv[p], hv[i] = hv[i], hv[p]
        i = p
    return size + 1


@njit(cache=True)
def _pop(hk, hv, size):
    key = hk[0]
    val = hv[0]
    size -= 1
    hk[0] = hk[size]
    hv[0] = hv[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        c = left
        if left + 1 < size and hk[left + 1] < hk[left]:
            c = left + 1
        if hk[i] <= hk[c]:
            break
        hk[c], hk[i] = hk[i], hk[c]
        hv[c], hv[i] = hv[i], hv[c]
        i = c
    return key, val, size


@njit(cache=True)
def pair_distances(indptr, indices, weights, order, src, dst, limit):
    """Distances ``d(src[i], dst[i])``, exact when ``<= limit[i]`` and ``inf`` otherwise.

    ``order`` sorts the pairs by source.  ``weights`` are aligned with ``indices``.
    """
    n = indptr.shape[0] - 1
    m = src.shape[0]
    out = np.full(m, np.inf)
    dist = np.full(n, np.inf)
    done = np.zeros(n, dtype=np.bool_)
    want = np.zeros(n, dtype=np.int64)
    touched = np.empty(n, dtype=np.int64)
    cap = indices.shape[0] + 1
    hk = np.empty(cap)
    hv = np.empty(cap, dtype=np.int64)
    start = 0
    while start < m:
        s = src[order[start]]
        stop = start
        reach = 0.0
        pending = 0
        while stop < m and src[order[stop]] == s:
            p = order[stop]
            if limit[p] > reach:
                reach = limit[p]
            if want[dst[p]] == 0:
                want[dst[p]] = 1
                pending += 1
            stop += 1
        n_touched = 1
        touched[0] = s
        dist[s] = 0.0
        size = _push(hk, hv, 0, 0.0, s)
        while size > 0 and pending > 0:
            d, v, size = _pop(hk, hv, size)
            if done[v]:
                continue
            if d > reach:
                break
            done[v] = True
            if want[v] == 1:
                want[v] = 2
                pending -= 1
            for e in range(indptr[v], indptr[v + 1]):
                w = indices[e]
                nd = d + weights[e]
                if nd < dist[w] and nd <= reach:
                    if dist[w] == np.inf:
                        touched[n_touched] = w
                        n_touched += 1
                    dist[w] = nd
                    size = _push(hk, hv, size, nd, w)
        for q in range(start, stop):
            p = order[q]
            t = dst[p]
            if done[t] and dist[t] <= limit[p]:
                out[p] = dist[t]
        for q in range(start, stop):
            want[dst[order[q]]] = 0
        for i in range(n_touched):
            dist[touched[i]] = np.inf
            done[touched[i]] = False
        start = stop
    return out


def bounded_pair_distances(graph, src, dst, limit) -> np.ndarray:
    """Weighted ``d(src[i], dst[i])`` in ``graph``; ``inf`` beyond ``limit[i]`` or if unreachable."""
    src = np.ascontiguousarray(src, dtype=np.int64)
    dst = np.ascontiguousarray(dst, dtype=np.int64)
    limit = np.ascontiguousarray(np.broadcast_to(limit, src.shape), dtype=float)
    if src.size == 0:
        return np.zeros(0)
    indptr, indices, edge_id = graph.csr
    weights = np.ascontiguousarray(graph.weight[edge_id], dtype=float)
    order = np.argsort(src, kind="stable")
    return pair_distances(indptr, indices, weights, order, src, dst, limit)
