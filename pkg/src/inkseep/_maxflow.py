"""Dinic max-flow on int64 capacities (numba-compiled).

Arcs come in pairs ``(2e, 2e+1)``, each the residual reverse of the other, so
an undirected-looking pair of opposing capacities costs one arc pair.
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def _dinic(n, start, to, cap, rev, s, t):
    flow = 0
    level = np.empty(n, np.int64)
    it = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    path = np.empty(n, np.int64)
    while True:
        level[:] = -1
        level[s] = 0
        qh = 0
        qt = 1
        queue[0] = s
        while qh < qt:
            u = queue[qh]
            qh += 1
            for a in range(start[u], start[u + 1]):
                v = to[a]
                if cap[a] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue[qt] = v
                    qt += 1
        if level[t] < 0:
            break
        for u in range(n):
            it[u] = start[u]
        while True:
            depth = 0
            u = s
            while u != t:
                advanced = False
                while it[u] < start[u + 1]:
                    a = it[u]
                    v = to[a]
                    if cap[a] > 0 and level[v] == level[u] + 1:
                        path[depth] = a
                        depth += 1
                        u = v
                        advanced = True
                        break
                    it[u] += 1
                if not advanced:
                    if depth == 0:
                        break
                    level[u] = -1
                    depth -= 1
                    u = to[rev[path[depth]]]
                    it[u] += 1
            if u != t:
                break
            b = cap[path[0]]
            for k in range(1, depth):
                if cap[path[k]] < b:
                    b = cap[path[k]]
            for k in range(depth):
                a = path[k]
                cap[a] -= b
                cap[rev[a]] += b
            flow += b
    return flow


@numba.njit(cache=True)
def _reachable(n, start, to, cap, s):
    seen = np.zeros(n, np.bool_)
    queue = np.empty(n, np.int64)
    seen[s] = True
    queue[0] = s
    qh = 0
    qt = 1
    while qh < qt:
        u = queue[qh]
        qh += 1
        for a in range(start[u], start[u + 1]):
            v = to[a]
            if cap[a] > 0 and not seen[v]:
                seen[v] = True
                queue[qt] = v
                qt += 1
    return seen


def max_flow_min_cut(n, tail, head, cap_fwd, cap_bwd, s, t):
    """Maximum s-t flow over edge pairs.

    Edge ``e`` joins ``tail[e] -> head[e]`` with capacity ``cap_fwd[e]`` and
    ``head[e] -> tail[e]`` with ``cap_bwd[e]``. Returns ``(flow, source_side)``
    where ``source_side`` is the minimal source set of a minimum cut.
    """
    tail = np.asarray(tail, dtype=np.int64)
    head = np.asarray(head, dtype=np.int64)
    m = len(tail)
    arc_tail = np.empty(2 * m, np.int64)
    arc_head = np.empty(2 * m, np.int64)
    arc_cap = np.empty(2 * m, np.int64)
    arc_tail[0::2], arc_tail[1::2] = tail, head
    arc_head[0::2], arc_head[1::2] = head, tail
    arc_cap[0::2] = np.asarray(cap_fwd, dtype=np.int64)
    arc_cap[1::2] = np.asarray(cap_bwd, dtype=np.int64)
    if m and arc_cap.min() < 0:
        raise ValueError("negative capacity")
    mate = np.arange(2 * m, dtype=np.int64) ^ 1

    order = np.argsort(arc_tail, kind="stable")
    where = np.empty(2 * m, np.int64)
    where[order] = np.arange(2 * m)
    to = arc_head[order]
    cap = arc_cap[order].copy()
    rev = where[mate[order]]
    start = np.zeros(n + 1, np.int64)
    np.cumsum(np.bincount(arc_tail, minlength=n), out=start[1:])

    flow = _dinic(n, start, to, cap, rev, s, t)
    return int(flow), _reachable(n, start, to, cap, s)
