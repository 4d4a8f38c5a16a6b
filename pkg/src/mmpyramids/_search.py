"""Exact weighted clique / independent-set search on small graphs (bitsets)."""
from __future__ import annotations

import numpy as np

from .errors import ResourceLimit


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def max_weight_clique(adj: np.ndarray, weight, target: float | None = None,
                      max_nodes: int = 5_000_000) -> tuple[float, list[int]]:
    """Maximum-weight clique of the graph with boolean adjacency ``adj``.

    With ``target`` set, the search stops at the first clique reaching it.
    The bound is a greedy coloring: each color class contributes its heaviest
    vertex.
    """
    adj = np.asarray(adj, dtype=bool)
    w = [float(x) for x in weight]
    n = len(w)
    nb = [0] * n
    for i in range(n):
        row = 0
        for j in np.flatnonzero(adj[i]).tolist():
            if j != i:
                row |= 1 << j
        nb[i] = row
    order = sorted(range(n), key=lambda i: -w[i])
    best_w = -1.0
    best: list[int] = []
    nodes = 0
    stop = False

    def color_bound(P: int):
        # returns vertices in expansion order with cumulative bounds
        verts = [v for v in order if P >> v & 1]
        classes: list[list[int]] = []
        class_bits: list[int] = []
        for v in verts:
            for c, cb in enumerate(class_bits):
                if not nb[v] & cb:
                    classes[c].append(v)
                    class_bits[c] |= 1 << v
                    break
            else:
                classes.append([v])
                class_bits.append(1 << v)
        seq = []
        total = 0.0
        for cls in classes:
            total += max(w[v] for v in cls)
            for v in cls:
                seq.append((v, total))
        return seq

    def expand(rw: float, R: list[int], P: int):
        nonlocal best_w, best, nodes, stop
        if rw > best_w:
            best_w, best = rw, list(R)
            if target is not None and best_w >= target:
                stop = True
                return
        if not P:
            return
        seq = color_bound(P)
        for v, bound in reversed(seq):
            if stop or rw + bound <= best_w:
                return
            nodes += 1
            if nodes > max_nodes:
                raise ResourceLimit(f"clique search exceeded max_nodes={max_nodes}", "max_nodes")
            R.append(v)
            expand(rw + w[v], R, P & nb[v])
            R.pop()
            P &= ~(1 << v)

    expand(0.0, [], (1 << n) - 1)
    return max(best_w, 0.0), sorted(best)


def max_weight_independent_set(conflict: np.ndarray, weight, target: float | None = None,
                               max_nodes: int = 5_000_000) -> tuple[float, list[int]]:
    conflict = np.asarray(conflict, dtype=bool)
    comp = ~(conflict | conflict.T)
    return max_weight_clique(comp, weight, target, max_nodes)


def greedy_independent_set(conflict: np.ndarray, weight) -> tuple[float, list[int]]:
    """Heaviest-first greedy independent set (a heuristic lower bound)."""
    conflict = np.asarray(conflict, dtype=bool)
    conflict = conflict | conflict.T
    w = np.asarray(weight, dtype=float)
    chosen: list[int] = []
    blocked = np.zeros(len(w), dtype=bool)
    for v in sorted(range(len(w)), key=lambda i: -w[i]):
        if not blocked[v]:
            chosen.append(v)
            blocked |= conflict[v]
            blocked[v] = True
    return float(w[chosen].sum()), sorted(chosen)
