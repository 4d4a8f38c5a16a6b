"""Exact max-flow on integer capacities (Dinic), used for transport feasibility."""
from __future__ import annotations

from collections import deque

import numpy as np

# Masses are quantized to multiples of 2**-SCALE_BITS before running flows.
SCALE_BITS = 60
SCALE = 1 << SCALE_BITS


def quantize(mass) -> list[int]:
    return [int(round(float(m) * SCALE)) for m in mass]


class _Dinic:
    def __init__(self, n: int):
        self.n = n
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[int] = []

    def add_edge(self, u: int, v: int, c: int) -> None:
        self.adj[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(c)
        self.adj[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0)

    def _bfs(self, s: int, t: int) -> bool:
        level = [-1] * self.n
        level[s] = 0
        q = deque([s])
        to, cap = self.to, self.cap
        while q:
            u = q.popleft()
            for e in self.adj[u]:
                if cap[e] > 0 and level[to[e]] < 0:
                    level[to[e]] = level[u] + 1
                    q.append(to[e])
        self.level = level
        return level[t] >= 0

    def _dfs(self, u: int, t: int, f: int) -> int:
        if u == t:
            return f
        to, cap, level, it = self.to, self.cap, self.level, self.it
        adj = self.adj[u]
        while it[u] < len(adj):
            e = adj[it[u]]
            v = to[e]
            if cap[e] > 0 and level[v] == level[u] + 1:
                got = self._dfs(v, t, min(f, cap[e]))
                if got:
                    cap[e] -= got
                    cap[e ^ 1] += got
                    return got
            it[u] += 1
        return 0

    def max_flow(self, s: int, t: int) -> int:
        total = 0
        while self._bfs(s, t):
            self.it = [0] * self.n
            while True:
                f = self._dfs(s, t, 1 << 126)
                if not f:
                    break
                total += f
        return total


def bipartite_max_flow(supply: list[int], demand: list[int], allowed: np.ndarray) -> int:
    """Max flow from left nodes (``supply``) to right nodes (``demand``).

    ``allowed[i, j]`` marks the uncapacitated edges i -> j.
    """
    n, m = len(supply), len(demand)
    s, t = n + m, n + m + 1
    g = _Dinic(n + m + 2)
    big = sum(supply) + 1
    for i in range(n):
        if supply[i] > 0:
            g.add_edge(s, i, supply[i])
    for j in range(m):
        if demand[j] > 0:
            g.add_edge(n + j, t, demand[j])
    rows, cols = np.nonzero(allowed)
    for i, j in zip(rows.tolist(), cols.tolist()):
        if supply[i] > 0 and demand[j] > 0:
            g.add_edge(i, n + j, big)
    return g.max_flow(s, t)
