"""Edmonds-Karp max flow on small dense graphs."""

from __future__ import annotations

from collections import deque

import numpy as np


def max_flow(capacity: np.ndarray, source: int, sink: int, tol: float = 1e-15):
    """Return (value, flow matrix) for a dense capacity matrix.

    ``np.inf`` capacities are allowed on internal edges.
    """
    cap = np.array(capacity, dtype=float)
    n = cap.shape[0]
    flow = np.zeros_like(cap)
    total = 0.0
    while True:
        parent = [-1] * n
        parent[source] = source
        queue = deque([source])
        while queue and parent[sink] == -1:
            u = queue.popleft()
            residual = cap[u] - flow[u]
            for v in np.flatnonzero(residual > tol):
                if parent[v] == -1:
                    parent[v] = u
                    queue.append(int(v))
        if parent[sink] == -1:
            return total, flow
        push = np.inf
        v = sink
        while v != source:
            u = parent[v]
            push = min(push, cap[u, v] - flow[u, v])
            v = u
        v = sink
        while v != source:
            u = parent[v]
            flow[u, v] += push
            flow[v, u] -= push
            v = u
        total += push


def bipartite_max_flow(left_cap, right_cap, edges):
    """Max flow source -> left -> right -> sink with node capacities.

    ``edges`` is an iterable of (left index, right index) pairs with unbounded
    capacity. Node capacities become source/sink edge capacities, which is
    node splitting for a bipartite graph. Returns (value, L x R flow matrix).
    """
    left_cap = np.asarray(left_cap, dtype=float)
    right_cap = np.asarray(right_cap, dtype=float)
    nL, nR = left_cap.size, right_cap.size
    n = nL + nR + 2
    s, t = n - 2, n - 1
    cap = np.zeros((n, n))
    cap[s, :nL] = left_cap
    cap[nL:nL + nR, t] = right_cap
    for a, b in edges:
        cap[a, nL + b] = np.inf
    value, flow = max_flow(cap, s, t)
    return value, np.clip(flow[:nL, nL:nL + nR], 0.0, None)
