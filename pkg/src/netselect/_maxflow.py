"""Max-flow / min-cut on s/t graphs with per-node terminal capacities.

The solver grows search trees from both terminals and reuses them
across augmentations (Boykov-Kolmogorov style), which is fast on the
sparse graphs produced here: every node touches at most one terminal
and internal arcs mirror network edges.

Terminal capacities are encoded in one signed array: tr_cap[p] > 0 is
the residual capacity of s->p, tr_cap[p] < 0 that of p->t.  Internal
arcs are stored in reverse-complement pairs (arc i and i^1), so
pushing flow on arc i adds residual to i^1.  Residuals at or below
``eps`` count as saturated.

The numba JIT is used when importable; the pure-Python path computes
the same thing (slowly).
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
    HAVE_NUMBA = False

    def _njit(*a, **k):
        def deco(f):
            return f

        return deco


@_njit(cache=True, nogil=True)
def _bk_kernel(tr_cap, cap, head, adj_off, adj_arc, eps):
    n = tr_cap.shape[0]
    tree = np.zeros(n, np.int8)  # 0 free, 1 source tree, 2 sink tree
    # parent[x]: arc linking x to its parent (-1 none, -2 terminal root).
    # Source tree: the arc parent->x.  Sink tree: the arc x->parent.
    parent = np.full(n, -1, np.int64)
    cur = np.zeros(n, np.int64)

    aq = np.empty(n, np.int64)  # active FIFO (wraparound, deduped)
    in_aq = np.zeros(n, np.uint8)
    ahead = 0
    atail = 0
    oq = np.empty(n, np.int64)  # orphan FIFO
    in_oq = np.zeros(n, np.uint8)
    ohead = 0
    otail = 0

    for p in range(n):
        if tr_cap[p] > eps:
            tree[p] = 1
            parent[p] = -2
        elif tr_cap[p] < -eps:
            tree[p] = 2
            parent[p] = -2
        else:
            continue
        cur[p] = adj_off[p]
        in_aq[p] = 1
        aq[atail % n] = p
        atail += 1

    flow = 0.0
    while True:
        # -- grow the trees until they touch --------------------------------
        connector = -1
        while ahead < atail:
            p = aq[ahead % n]
            if tree[p] == 0:
                ahead += 1
                in_aq[p] = 0
                continue
            tp = tree[p]
            k = cur[p]
            end = adj_off[p + 1]
            found = -1
            while k < end:
                a = adj_arc[k]
                q = head[a]
                # residual arc used for growth: p->q for the source tree,
                # q->p for the sink tree; either way it is the arc that
                # would carry s->t flow through (p, q).
                ra = a if tp == 1 else a ^ 1
                if cap[ra] > eps:
                    tq = tree[q]
                    if tq == 0:
                        tree[q] = tp
                        parent[q] = ra
                        cur[q] = adj_off[q]
                        if in_aq[q] == 0:
                            in_aq[q] = 1
                            aq[atail % n] = q
                            atail += 1
                    elif tq != tp:
                        found = ra
                        break
                k += 1
            cur[p] = k
            if found >= 0:
                connector = found
                break  # p stays active; the same arc is re-examined next
            ahead += 1
            in_aq[p] = 0
        if connector < 0:
            break  # no augmenting path remains

        # -- augment along the path through the connector -------------------
        b = cap[connector]
        x = head[connector ^ 1]
        while parent[x] != -2:
            a = parent[x]
            if cap[a] < b:
                b = cap[a]
            x = head[a ^ 1]
        if tr_cap[x] < b:
            b = tr_cap[x]
        x = head[connector]
        while parent[x] != -2:
            a = parent[x]
            if cap[a] < b:
                b = cap[a]
            x = head[a]
        if -tr_cap[x] < b:
            b = -tr_cap[x]

        flow += b
        cap[connector] -= b
        cap[connector ^ 1] += b
        x = head[connector ^ 1]
        while parent[x] != -2:
            a = parent[x]
            cap[a] -= b
            cap[a ^ 1] += b
            nxt = head[a ^ 1]
            if cap[a] <= eps:
                parent[x] = -1
                if in_oq[x] == 0:
                    in_oq[x] = 1
                    oq[otail % n] = x
                    otail += 1
            x = nxt
        tr_cap[x] -= b
        if tr_cap[x] <= eps:
            parent[x] = -1
            if in_oq[x] == 0:
                in_oq[x] = 1
                oq[otail % n] = x
                otail += 1
        x = head[connector]
        while parent[x] != -2:
            a = parent[x]
            cap[a] -= b
            cap[a ^ 1] += b
            nxt = head[a]
            if cap[a] <= eps:
                parent[x] = -1
                if in_oq[x] == 0:
                    in_oq[x] = 1
                    oq[otail % n] = x
                    otail += 1
            x = nxt
        tr_cap[x] += b
        if -tr_cap[x] <= eps:
            parent[x] = -1
            if in_oq[x] == 0:
                in_oq[x] = 1
                oq[otail % n] = x
                otail += 1

        # -- adopt orphans or free them --------------------------------------
        while ohead < otail:
            x = oq[ohead % n]
            ohead += 1
            in_oq[x] = 0
            tx = tree[x]
            if tx == 0:
                continue
            newp = -1
            for k in range(adj_off[x], adj_off[x + 1]):
                a = adj_arc[k]
                y = head[a]
                if tree[y] != tx:
                    continue
                ra = (a ^ 1) if tx == 1 else a
                if cap[ra] <= eps:
                    continue
                # y must be rooted at a terminal, not at another orphan
                z = y
                ok = False
                while True:
                    pz = parent[z]
                    if pz == -2:
                        ok = True
                        break
                    if pz == -1:
                        break
                    z = head[pz ^ 1] if tx == 1 else head[pz]
                if ok:
                    newp = ra
                    break
            if newp >= 0:
                parent[x] = newp
            else:
                # x leaves the tree: orphan its children, wake neighbors
                for k in range(adj_off[x], adj_off[x + 1]):
                    a = adj_arc[k]
                    y = head[a]
                    ty = tree[y]
                    if ty == 0:
                        continue
                    if (ty == 1 and cap[a ^ 1] > eps) or (ty == 2 and cap[a] > eps):
                        cur[y] = adj_off[y]
                        if in_aq[y] == 0:
                            in_aq[y] = 1
                            aq[atail % n] = y
                            atail += 1
                    if ty == tx:
                        pa = parent[y]
                        if (tx == 1 and pa == a) or (tx == 2 and pa == (a ^ 1)):
                            parent[y] = -1
                            if in_oq[y] == 0:
                                in_oq[y] = 1
                                oq[otail % n] = y
                                otail += 1
                tree[x] = 0
                parent[x] = -1

    # -- residual reachability from s: the minimal minimum cut ---------------
    reached = np.zeros(n, np.uint8)
    bfs = np.empty(n, np.int64)
    t2 = 0
    for p in range(n):
        if tr_cap[p] > eps:
            reached[p] = 1
            bfs[t2] = p
            t2 += 1
    h2 = 0
    ok_flag = 1
    while h2 < t2:
        u = bfs[h2]
        h2 += 1
        if tr_cap[u] < -eps:
            ok_flag = 0  # residual path s -> u -> t would remain: not maximal
        for k in range(adj_off[u], adj_off[u + 1]):
            a = adj_arc[k]
            if cap[a] > eps:
                v = head[a]
                if reached[v] == 0:
                    reached[v] = 1
                    bfs[t2] = v
                    t2 += 1
    return flow, reached, ok_flag


def solve_st_mincut(
    n: int,
    tr_cap: np.ndarray,
    edge_u: np.ndarray,
    edge_v: np.ndarray,
    edge_cap: np.ndarray,
    eps: float = 1e-12,
) -> tuple[float, np.ndarray]:
    """Max-flow between the implicit terminals of an s/t graph.

    Parameters
    ----------
    n : node count (terminals excluded)
    tr_cap : signed terminal capacities (see module docstring)
    edge_u, edge_v, edge_cap : internal edges, capacity both directions
    eps : saturation threshold for residuals

    Returns
    -------
    (flow_value, source_mask) where source_mask flags the nodes
    reachable from s in the final residual graph — the minimal minimum
    cut, and the sparsest optimal selection downstream.
    """
    edge_u = np.asarray(edge_u, dtype=np.int64)
    edge_v = np.asarray(edge_v, dtype=np.int64)
    edge_cap = np.asarray(edge_cap, dtype=np.float64)
    ne = len(edge_u)

    head = np.empty(2 * ne, dtype=np.int64)
    head[0::2] = edge_v
    head[1::2] = edge_u
    cap = np.empty(2 * ne, dtype=np.float64)
    cap[0::2] = edge_cap
    cap[1::2] = edge_cap
    tails = np.empty(2 * ne, dtype=np.int64)
    tails[0::2] = edge_u
    tails[1::2] = edge_v

    adj_arc = np.argsort(tails, kind="stable").astype(np.int64)
    counts = np.bincount(tails, minlength=n) if ne else np.zeros(n, dtype=np.int64)
    adj_off = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=adj_off[1:])

    flow, reached, ok = _bk_kernel(
        np.array(tr_cap, dtype=np.float64),  # kernel mutates its copy
        cap,
        head,
        adj_off,
        adj_arc,
        float(eps),
    )
    if not ok:
        raise RuntimeError("max-flow terminated with an augmenting path remaining")
    return float(flow), reached.astype(bool)
