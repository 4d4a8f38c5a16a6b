"""Partial diameter, observable diameter, separation distance, covering number.

Scale-covariant quantities are computed on ``X.base`` and multiplied by
``X.unit`` once at the end, so scaling a space scales them exactly.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ._search import max_weight_clique
from .core import METRIC_TOL, FiniteMmSpace
from .errors import InvalidParameter, ResourceLimit
from .measures import MeasureOnSpace
from .results import Cert, CertifiedInterval, Flagged

MASS_TOL = 1e-12
COVER_MAX_POINTS = 40


class LipschitzFunction:
    """Real function on the points of a space, checked to be 1-Lipschitz."""

    def __init__(self, space: FiniteMmSpace, values):
        v = np.array(values, dtype=float).ravel()
        if v.shape != (space.n,):
            raise InvalidParameter("values length does not match the space")
        gap = np.abs(v[:, None] - v[None, :])
        if np.any(gap > space.dist + METRIC_TOL * max(1.0, space.diameter())):
            raise InvalidParameter("function is not 1-Lipschitz")
        self.space = space
        self.values = v


# ------------------------------------------------------------ partial diameter

def _partial_diameter_base(base: np.ndarray, mass: np.ndarray, need: float) -> float:
    if need <= 0:
        return 0.0
    support = np.flatnonzero(mass > 0)
    d = base[np.ix_(support, support)]
    w = mass[support]
    levels = np.unique(d)
    target = need - MASS_TOL

    def feasible(D: float) -> bool:
        got, _ = max_weight_clique(d <= D, w, target=target)
        return got >= target

    lo, hi = 0, len(levels) - 1
    if not feasible(levels[hi]):
        # total mass below the requirement: no admissible subset
        return math.inf
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(levels[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(levels[lo])


def partial_diameter(mu: MeasureOnSpace, one_minus_kappa: float) -> float:
    """Smallest diameter of a subset carrying mass >= 1 - kappa.

    Exact: binary search over the distinct distances, each step a
    max-weight clique in the graph d <= D.
    """
    X = mu.space
    return X.unit * _partial_diameter_base(X.base, np.asarray(mu.mass), float(one_minus_kappa))


def partial_diameter_line(values: np.ndarray, mass: np.ndarray, need: float) -> float:
    """Partial diameter of an atomic measure on the real line (sliding window)."""
    if need <= 0:
        return 0.0
    order = np.argsort(values, kind="stable")
    v = np.asarray(values, dtype=float)[order]
    m = np.asarray(mass, dtype=float)[order]
    cum = np.concatenate([[0.0], np.cumsum(m)])
    target = need - MASS_TOL
    best = math.inf
    j = 0
    for i in range(len(v)):
        j = max(j, i)
        while j < len(v) and cum[j + 1] - cum[i] < target:
            j += 1
        if j == len(v):
            break
        best = min(best, v[j] - v[i])
    return float(best)


# ------------------------------------------------------------ observable diameter

def _subset_distance_functions(base: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Rows are d(., A) for the subsets A encoded in boolean ``masks``."""
    big = np.where(masks[:, None, :], base[None, :, :], np.inf)
    return big.min(axis=2)


def _ascent(base: np.ndarray, w: np.ndarray, need: float, f: np.ndarray, sweeps: int) -> tuple[float, np.ndarray]:
    """Coordinate ascent on the 1-Lipschitz polytope: move one value at a time
    to an end of its feasible interval when that helps."""
    n = len(f)
    f = f.copy()
    val = partial_diameter_line(f, w, need)
    for _ in range(sweeps):
        improved = False
        for i in range(n):
            lo = np.max(np.delete(f - base[i], i)) if n > 1 else f[i]
            hi = np.min(np.delete(f + base[i], i)) if n > 1 else f[i]
            for cand in (lo, hi):
                if cand == f[i]:
                    continue
                old = f[i]
                f[i] = cand
                v = partial_diameter_line(f, w, need)
                if v > val:
                    val = v
                    improved = True
                else:
                    f[i] = old
        if not improved:
            break
    return val, f


def _obs_lower_base(base: np.ndarray, w: np.ndarray, kappa: float, seed: int,
                    n_random: int, starts: int, sweeps: int):
    n = len(w)
    need = 1.0 - kappa
    rng = np.random.default_rng(seed)
    if n <= 10:
        codes = np.arange(1, 1 << n)
        masks = ((codes[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
    else:
        eye = np.eye(n, dtype=bool)
        iu = np.triu_indices(n, 1)
        pairs = eye[iu[0]] | eye[iu[1]]
        rand = rng.random((n_random, n)) < rng.uniform(0.1, 0.6, size=(n_random, 1))
        rand[~rand.any(axis=1), 0] = True
        masks = np.vstack([eye, pairs, rand])
    best_val, best_f = 0.0, np.zeros(n)
    for chunk in range(0, len(masks), 256):
        F = _subset_distance_functions(base, masks[chunk:chunk + 256])
        for f in F:
            v = partial_diameter_line(f, w, need)
            if v > best_val:
                best_val, best_f = v, f
    if n > 1 and sweeps > 0:
        inits = [best_f]
        for _ in range(starts):
            # random 1-Lipschitz start: McShane extension from a random anchor set
            k = rng.integers(1, n + 1)
            anchors = rng.choice(n, size=k, replace=False)
            diam = float(base.max())
            g = rng.uniform(0, diam, size=k)
            inits.append(np.min(g[None, :] + base[:, anchors], axis=1))
        for f0 in inits:
            v, f = _ascent(base, w, need, f0, sweeps)
            if v > best_val:
                best_val, best_f = v, f
    return best_val, best_f


def obs_diameter(X: FiniteMmSpace, kappa: float, seed: int = 0, n_random: int = 200,
                 starts: int = 3, sweeps: int = 4) -> CertifiedInterval:
    """Certified bracket for the observable diameter ObsDiam(X; -kappa).

    Lower end: the best 1-Lipschitz function found among distance functions
    to subsets and a seeded coordinate ascent. Upper end: the partial
    diameter of X itself and Sep(X; kappa/2, kappa/2), both of which bound
    every 1-Lipschitz image.
    """
    if not 0 < kappa < 1:
        raise InvalidParameter("kappa must lie in (0, 1)")
    base, w = X.base, np.asarray(X.weight)
    if X.n == 1:
        return CertifiedInterval(0.0, 0.0, "one point", "one point")
    low, f = _obs_lower_base(base, w, kappa, seed, n_random, starts, sweeps)
    pd = _partial_diameter_base(base, w, 1.0 - kappa)
    sep = _separation_base(base, w, [kappa / 2, kappa / 2])
    if sep < pd:
        up, up_w = sep, "separation cap"
    else:
        up, up_w = pd, "partial diameter cap"
    if low > up:
        # cannot happen for a 1-Lipschitz witness; guard against float noise
        low = up
    u = X.unit
    return CertifiedInterval(u * low, u * up, ("lipschitz function", tuple(f)), up_w)


# ------------------------------------------------------------ separation distance

def _sep_feasible(base: np.ndarray, w: np.ndarray, kappas: Sequence[float], t: float,
                  max_nodes: int) -> bool:
    """Are there disjoint sets A_i with mass >= kappa_i, pairwise at distance >= t?"""
    n = len(w)
    k = len(kappas)
    kap = [float(x) - MASS_TOL for x in kappas]
    order = sorted(range(n), key=lambda i: (-w[i], i))
    close = base < t  # pairs that may not sit in different groups
    gmass = [0.0] * k
    members: list[list[int]] = [[] for _ in range(k)]
    nodes = 0

    def blocked(v: int, g: int) -> bool:
        for h in range(k):
            if h != g:
                for u in members[h]:
                    if close[v, u]:
                        return True
        return False

    def rec(pos: int) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > max_nodes:
            raise ResourceLimit(f"separation search exceeded max_nodes={max_nodes}", "max_nodes")
        if all(gmass[g] >= kap[g] for g in range(k)):
            return True
        if pos == n:
            return False
        rest = order[pos:]
        for g in range(k):
            if gmass[g] >= kap[g]:
                continue
            reach = gmass[g] + sum(w[v] for v in rest if not blocked(v, g))
            if reach < kap[g]:
                return False
        v = order[pos]
        opened_same: set[float] = set()
        for g in range(k):
            if not members[g]:
                # groups with equal kappa are interchangeable: open only one
                if kappas[g] in opened_same:
                    continue
                opened_same.add(kappas[g])
            if blocked(v, g):
                continue
            members[g].append(v)
            gmass[g] += w[v]
            if rec(pos + 1):
                return True
            members[g].pop()
            gmass[g] -= w[v]
        return rec(pos + 1)

    return rec(0)


def _separation_base(base: np.ndarray, w: np.ndarray, kappas: Sequence[float],
                     max_nodes: int = 2_000_000) -> float:
    kappas = [float(x) for x in kappas]
    if len(kappas) < 2:
        raise InvalidParameter("need at least two kappas")
    if any(x <= 0 for x in kappas):
        raise InvalidParameter("kappas must be positive")
    if sum(kappas) > 1 + MASS_TOL:
        return 0.0
    levels = np.unique(base[base > 0])
    if levels.size == 0:
        return 0.0
    if not _sep_feasible(base, w, kappas, levels[0], max_nodes):
        return 0.0
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if _sep_feasible(base, w, kappas, levels[mid], max_nodes):
            lo = mid
        else:
            hi = mid - 1
    return float(levels[lo])


def separation_distance(X: FiniteMmSpace, kappas: Sequence[float], max_nodes: int = 2_000_000) -> float:
    """Largest t such that disjoint sets of masses >= kappa_i sit pairwise at
    distance >= t; 0 when no such family exists.

    Points may be left out of every set, so the search labels individual
    points rather than whole threshold components.
    """
    return X.unit * _separation_base(X.base, np.asarray(X.weight), kappas, max_nodes)


# ------------------------------------------------------------ covering number

def _balls(X: FiniteMmSpace, r: float) -> tuple[list[int], list[int]]:
    """Distinct maximal closed r-balls as bitmasks, with their centers."""
    inside = X.dist <= r
    seen: dict[int, int] = {}
    for c in range(X.n):
        bits = 0
        for j in np.flatnonzero(inside[c]).tolist():
            bits |= 1 << j
        seen.setdefault(bits, c)
    masks = list(seen)
    keep = [i for i, a in enumerate(masks)
            if not any(j != i and (a & b) == a and a != b for j, b in enumerate(masks))]
    return [masks[i] for i in keep], [seen[masks[i]] for i in keep]


def _mask_mass(mask: int, w: list[float]) -> float:
    s = 0.0
    while mask:
        low = mask & -mask
        s += w[low.bit_length() - 1]
        mask ^= low
    return s


def _greedy_cover(balls: list[int], w: list[float], need: float) -> list[int]:
    covered, mass, chosen = 0, 0.0, []
    while mass < need - MASS_TOL:
        gains = [_mask_mass(b & ~covered, w) for b in balls]
        i = int(np.argmax(gains))
        chosen.append(i)
        covered |= balls[i]
        mass = _mask_mass(covered, w)
    return chosen


def _exact_cover(balls: list[int], w: list[float], need: float, k: int, max_nodes: int):
    """A set of k balls covering mass >= need, or None."""
    nb = len(balls)
    nodes = 0
    target = need - MASS_TOL

    def rec(start: int, left: int, covered: int, mass: float, chosen: list[int]):
        nonlocal nodes
        if mass >= target:
            return list(chosen)
        if left == 0:
            return None
        nodes += 1
        if nodes > max_nodes:
            raise ResourceLimit(f"cover search exceeded max_nodes={max_nodes}", "max_nodes")
        gains = sorted((( _mask_mass(balls[i] & ~covered, w), i) for i in range(start, nb)), reverse=True)
        if mass + sum(g for g, _ in gains[:left]) < target:
            return None
        for i in range(start, nb):
            g = _mask_mass(balls[i] & ~covered, w)
            if g <= 0:
                continue
            chosen.append(i)
            got = rec(i + 1, left - 1, covered | balls[i], mass + g, chosen)
            chosen.pop()
            if got is not None:
                return got
        return None

    return rec(0, k, 0, 0.0, [])


def _cover(X: FiniteMmSpace, r: float, kappa: float, max_points: int, max_nodes: int,
           exact: bool) -> tuple[list[int], bool]:
    if not r > 0:
        raise InvalidParameter("r must be positive")
    if not 0 < kappa < 1:
        raise InvalidParameter("kappa must lie in (0, 1)")
    need = 1.0 - kappa
    w = [float(x) for x in X.weight]
    balls, centers = _balls(X, r)
    greedy = _greedy_cover(balls, w, need)
    if not exact or X.n > max_points:
        if exact:
            raise ResourceLimit(f"|X| = {X.n} exceeds max_points={max_points}", "max_points")
        return [centers[i] for i in greedy], False
    sizes = sorted((_mask_mass(b, w) for b in balls), reverse=True)
    lower, acc = 0, 0.0
    while acc < need - MASS_TOL:
        acc += sizes[lower]
        lower += 1
    best = greedy
    for k in range(lower, len(greedy)):
        got = _exact_cover(balls, w, need, k, max_nodes)
        if got is not None:
            best = got
            break
    return [centers[i] for i in best], True


def covering_number(X: FiniteMmSpace, r: float, kappa: float,
                    max_points: int = COVER_MAX_POINTS, max_nodes: int = 2_000_000) -> int:
    """Fewest closed r-balls centered in X covering mass >= 1 - kappa."""
    net, _ = _cover(X, r, kappa, max_points, max_nodes, exact=True)
    return len(net)


def covering_number_flagged(X: FiniteMmSpace, r: float, kappa: float,
                            max_points: int = COVER_MAX_POINTS) -> Flagged:
    """Exact covering number within budget, greedy upper bound beyond it."""
    net, exact = _cover(X, r, kappa, max_points, 2_000_000, exact=X.n <= max_points)
    return Flagged(len(net), Cert.EXACT if exact else Cert.UPPER)


def eps_supporting_net(X: FiniteMmSpace, eps: float) -> list[int]:
    """A smallest set N with mu(B_eps(N)) >= 1 - eps."""
    if not 0 < eps < 1:
        raise InvalidParameter("eps must lie in (0, 1)")
    net, _ = _cover(X, eps, eps, COVER_MAX_POINTS, 2_000_000, exact=True)
    covered = np.any(X.dist[net] <= eps, axis=0)
    assert X.weight[covered].sum() >= 1 - eps - MASS_TOL
    return sorted(net)
