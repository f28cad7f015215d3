"""Maximum bipartite transport with real capacities (Dinic's algorithm).

``max_transport(supply, demand, allowed)`` returns the largest total mass that
can be moved from supply atoms to demand atoms along allowed edges without
exceeding either side.  By max-flow/min-cut this equals
``min_A [supply(A^c) + demand(N(A))]`` over subsets ``A`` of supply atoms.
"""

from __future__ import annotations

from collections import deque

import numpy as np


class _Dinic:
    def __init__(self, n: int):
        self.n = n
        self.graph: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[float] = []

    def add_edge(self, u: int, v: int, c: float) -> None:
        self.graph[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(c)
        self.graph[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0.0)

    def _bfs(self, s: int, t: int, eps: float) -> list[int] | None:
        level = [-1] * self.n
        level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for e in self.graph[u]:
                v = self.to[e]
                if level[v] < 0 and self.cap[e] > eps:
                    level[v] = level[u] + 1
                    q.append(v)
        return level if level[t] >= 0 else None

    def max_flow(self, s: int, t: int, eps: float) -> float:
        total = 0.0
        to, cap, graph = self.to, self.cap, self.graph
        while True:
            level = self._bfs(s, t, eps)
            if level is None:
                return total
            it = [0] * self.n
            while True:
                # iterative DFS for one blocking-flow augmentation
                path: list[int] = []
                u = s
                while u != t:
                    adj = graph[u]
                    advanced = False
                    while it[u] < len(adj):
                        e = adj[it[u]]
                        v = to[e]
                        if cap[e] > eps and level[v] == level[u] + 1:
                            path.append(e)
                            u = v
                            advanced = True
                            break
                        it[u] += 1
                    if not advanced:
                        if u == s:
                            break
                        level[u] = -1
                        e = path.pop()
                        u = to[e ^ 1]
                        it[u] += 1
                if u != t:
                    break
                push = min(cap[e] for e in path)
                for e in path:
                    cap[e] -= push
                    cap[e ^ 1] += push
                total += push


def max_transport(supply, demand, allowed) -> float:
    supply = np.asarray(supply, dtype=float)
    demand = np.asarray(demand, dtype=float)
    allowed = np.asarray(allowed, dtype=bool)
    na, nb = len(supply), len(demand)
    if na == 0 or nb == 0 or not allowed.any():
        return 0.0
    # atoms with no allowed edge cannot carry flow
    rows = np.flatnonzero(allowed.any(axis=1))
    cols = np.flatnonzero(allowed.any(axis=0))
    sub = allowed[np.ix_(rows, cols)]
    s, t = 0, 1 + len(rows) + len(cols)
    g = _Dinic(t + 1)
    big = float(supply.sum() + demand.sum()) + 1.0
    for i, r in enumerate(rows):
        g.add_edge(s, 1 + i, float(supply[r]))
    for j, c in enumerate(cols):
        g.add_edge(1 + len(rows) + j, t, float(demand[c]))
    for i, j in zip(*np.nonzero(sub)):
        g.add_edge(1 + i, 1 + len(rows) + j, big)
    eps = 1e-15 * big
    return g.max_flow(s, t, eps)
