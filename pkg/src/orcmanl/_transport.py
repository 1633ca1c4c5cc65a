"""Exact min-cost flow for small dense transportation problems.

Masses are integers (uniform measures scaled to a common denominator), so the
optimal plan is integral and, for integer costs, the objective is exact.  The
solver is primal-dual: a Dijkstra pass on reduced costs raises node potentials,
then augmenting paths over zero-reduced-cost arcs saturate as much flow as they
can before the next pass.  Infinite costs mark forbidden arcs.
"""
import numpy as np
from numba import njit

INF = np.inf


@njit(cache=True)
def transport_flow(supply, demand, cost, tol):
    """Return ``(flow, total_cost)``; ``total_cost`` is ``inf`` if demand cannot be met."""
    a = supply.shape[0]
    b = demand.shape[0]
    flow = np.zeros((a, b), dtype=np.int64)
    rs = supply.copy()
    rt = demand.copy()
    ps = np.zeros(a)
    pt = np.zeros(b)
    remaining = 0
    for i in range(a):
        remaining += rs[i]

    dist_s = np.empty(a)
    dist_t = np.empty(b)
    done_s = np.empty(a, dtype=np.bool_)
    done_t = np.empty(b, dtype=np.bool_)
    # BFS bookkeeping: parent of sink j is a source; parent of source i is a sink (-1 = root)
    par_t = np.empty(b, dtype=np.int64)
    par_s = np.empty(a, dtype=np.int64)
    seen_s = np.empty(a, dtype=np.bool_)
    seen_t = np.empty(b, dtype=np.bool_)
    queue = np.empty(a + b, dtype=np.int64)

    while remaining > 0:
        # --- Dijkstra on reduced costs from every source with spare supply
        for i in range(a):
            dist_s[i] = 0.0 if rs[i] > 0 else INF
            done_s[i] = False
        for j in range(b):
            dist_t[j] = INF
            done_t[j] = False
        target = INF
        while True:
            best = INF
            bi = -1
            side = 0
            for i in range(a):
                if not done_s[i] and dist_s[i] < best:
                    best = dist_s[i]
                    bi = i
                    side = 0
            for j in range(b):
                if not done_t[j] and dist_t[j] < best:
                    best = dist_t[j]
                    bi = j
                    side = 1
            if bi < 0 or best >= target:
                break
            if side == 0:
                done_s[bi] = True
                for j in range(b):
                    c = cost[bi, j]
                    if c == INF or done_t[j]:
                        continue
                    rc = c + ps[bi] - pt[j]
                    if rc < 0.0:
                        rc = 0.0
                    nd = best + rc
                    if nd < dist_t[j]:
                        dist_t[j] = nd
            else:
                done_t[bi] = True
                if rt[bi] > 0 and best < target:
                    target = best
                for i in range(a):
                    if flow[i, bi] > 0 and not done_s[i]:
                        rc = pt[bi] - cost[i, bi] - ps[i]
                        if rc < 0.0:
                            rc = 0.0
                        nd = best + rc
                        if nd < dist_s[i]:
                            dist_s[i] = nd
        if target == INF:
            return flow, INF
        for i in range(a):
            d = dist_s[i] if dist_s[i] < target else target
            ps[i] += d
        for j in range(b):
            d = dist_t[j] if dist_t[j] < target else target
            pt[j] += d

        # --- augment along admissible (zero reduced cost) paths until none remain
        while remaining > 0:
            head = 0
            tail = 0
            for i in range(a):
                seen_s[i] = False
                if rs[i] > 0:
                    seen_s[i] = True
                    par_s[i] = -1
                    queue[tail] = i
                    tail += 1
            for j in range(b):
                seen_t[j] = False
            found = -1
            while head < tail and found < 0:
                node = queue[head]
                head += 1
                if node < a:
                    i = node
                    for j in range(b):
                        if seen_t[j]:
                            continue
                        c = cost[i, j]
                        if c == INF:
                            continue
                        rc = c + ps[i] - pt[j]
                        if rc <= tol and rc >= -tol:
                            seen_t[j] = True
                            par_t[j] = i
                            if rt[j] > 0:
                                found = j
                                break
                            queue[tail] = a + j
                            tail += 1
                else:
                    j = node - a
                    for i in range(a):
                        if seen_s[i] or flow[i, j] == 0:
                            continue
                        seen_s[i] = True
                        par_s[i] = j
                        queue[tail] = i
                        tail += 1
            if found < 0:
                break
            # bottleneck along the path
            j = found
            bott = rt[j]
            while True:
                i = par_t[j]
                pj = par_s[i]
                if pj < 0:
                    if rs[i] < bott:
                        bott = rs[i]
                    break
                if flow[i, pj] < bott:
                    bott = flow[i, pj]
                j = pj
            j = found
            rt[j] -= bott
            while True:
                i = par_t[j]
                flow[i, j] += bott
                pj = par_s[i]
                if pj < 0:
                    rs[i] -= bott
                    break
                flow[i, pj] -= bott
                j = pj
            remaining -= bott

    total = 0.0
    for i in range(a):
        for j in range(b):
            if flow[i, j] > 0:
                total += flow[i, j] * cost[i, j]
    return flow, total


@njit(cache=True)
def _gcd(x, y):
    while y:
        x, y = y, x % y
    return x


@njit(cache=True)
def orc_unit_kernel(indptr, indices, us, vs, n_vertices):
    """Unweighted Ollivier-Ricci curvature of every edge ``(us[e], vs[e])``.

    The ground metric is the hop distance in the full graph.  Between a neighbor
    of x and a neighbor of y it is at most 3 (through the edge itself), so it is
    0 (same vertex), 1 (adjacent), 2 (common neighbor) or 3.  Edges with an
    empty reduced neighborhood get NaN.
    """
    n_edges = us.shape[0]
    kappa = np.empty(n_edges)
    stamp = np.zeros(n_vertices, dtype=np.int64)
    cur = 0
    for e in range(n_edges):
        x = us[e]
        y = vs[e]
        a = indptr[x + 1] - indptr[x] - 1
        b = indptr[y + 1] - indptr[y] - 1
        if a <= 0 or b <= 0:
            kappa[e] = np.nan
            continue
        src = np.empty(a, dtype=np.int64)
        dst = np.empty(b, dtype=np.int64)
        t = 0
        for p in range(indptr[x], indptr[x + 1]):
            if indices[p] != y:
                src[t] = indices[p]
                t += 1
        t = 0
        for p in range(indptr[y], indptr[y + 1]):
            if indices[p] != x:
                dst[t] = indices[p]
                t += 1
        cost = np.empty((a, b))
        for i in range(a):
            s = src[i]
            cur += 1
            for p in range(indptr[s], indptr[s + 1]):
                stamp[indices[p]] = cur
            for j in range(b):
                d = dst[j]
                if d == s:
                    cost[i, j] = 0.0
                elif stamp[d] == cur:
                    cost[i, j] = 1.0
                else:
                    c = 3.0
                    for q in range(indptr[d], indptr[d + 1]):
                        if stamp[indices[q]] == cur:
                            c = 2.0
                            break
                    cost[i, j] = c
        g = _gcd(a, b)
        lcm = a // g * b
        supply = np.full(a, lcm // a, dtype=np.int64)
        demand = np.full(b, lcm // b, dtype=np.int64)
        _, total = transport_flow(supply, demand, cost, 0.5)
        kappa[e] = 1.0 - total / lcm
    return kappa
