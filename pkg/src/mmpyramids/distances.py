"""Box distance, distortion, coupling mass and eps-mm-isomorphism certificates."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from ._flow import SCALE, bipartite_max_flow, quantize
from ._search import greedy_independent_set, max_weight_independent_set
from .core import METRIC_TOL, FiniteMmSpace
from .errors import InvalidParameter, ResourceLimit
from .measures import MeasureOnSpace, prokhorov_at_most, prokhorov_flow
from .results import Cert, Flagged

BOX_MAX_PAIRS = 20
CERTIFY_EXACT_MAX = 12

Pairs = Sequence[tuple[int, int]]


def _gap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """|a - b| elementwise where inf - inf counts as 0."""
    both_inf = np.isinf(a) & np.isinf(b)
    with np.errstate(invalid="ignore"):
        g = np.abs(a - b)
    g[both_inf] = 0.0
    return g


def distortion(S: Iterable[tuple[int, int]], X: FiniteMmSpace, Y: FiniteMmSpace) -> float:
    """max |dX(x,x') - dY(y,y')| over pairs in S; 0 for empty S."""
    S = list(S)
    if not S:
        return 0.0
    xs = np.array([p[0] for p in S])
    ys = np.array([p[1] for p in S])
    return float(_gap(X.dist[np.ix_(xs, xs)], Y.dist[np.ix_(ys, ys)]).max())


def max_coupling_mass(S: Iterable[tuple[int, int]], mu, nu) -> float:
    """Largest pi(S) over couplings pi of (mu, nu)."""
    mu = np.asarray(getattr(mu, "mass", mu), dtype=float)
    nu = np.asarray(getattr(nu, "mass", nu), dtype=float)
    allowed = np.zeros((len(mu), len(nu)), dtype=bool)
    for x, y in S:
        allowed[x, y] = True
    if not allowed.any():
        return 0.0
    return bipartite_max_flow(quantize(mu), quantize(nu), allowed) / SCALE


def _pair_distortion_matrix(X: FiniteMmSpace, Y: FiniteMmSpace) -> np.ndarray:
    """Distortion between every two pairs of X x Y, pair (x, y) at x*|Y| + y."""
    a = np.repeat(np.repeat(X.dist, Y.n, axis=0), Y.n, axis=1)
    b = np.tile(Y.dist, (X.n, X.n))
    return _gap(a, b)


def box_distance_exact(X: FiniteMmSpace, Y: FiniteMmSpace, max_pairs: int = BOX_MAX_PAIRS) -> float:
    """Exact box distance on small spaces.

    For a threshold delta the admissible S are the cliques of the graph that
    joins two pairs when their distortion is <= delta; coupling mass is
    monotone in S, so only maximal cliques matter. The thresholds range over
    the distinct distortion values.
    """
    if X.n * Y.n > max_pairs:
        raise ResourceLimit(f"|X||Y| = {X.n * Y.n} exceeds max_pairs={max_pairs}", "max_pairs")
    g = _pair_distortion_matrix(X, Y)
    k = X.n * Y.n
    pairs = [(i // Y.n, i % Y.n) for i in range(k)]
    qx, qy = quantize(X.weight), quantize(Y.weight)
    total = min(sum(qx), sum(qy))
    levels = np.unique(g[np.isfinite(g)])
    best = 1.0
    cache: dict[frozenset, float] = {}
    for delta in levels:
        if delta >= best:
            break
        G = nx.Graph()
        G.add_nodes_from(range(k))
        rows, cols = np.nonzero(np.triu(g <= delta, 1))
        G.add_edges_from(zip(rows.tolist(), cols.tolist()))
        deficit = 1.0
        for clique in nx.find_cliques(G):
            key = frozenset(clique)
            if key not in cache:
                allowed = np.zeros((X.n, Y.n), dtype=bool)
                for c in clique:
                    allowed[pairs[c]] = True
                cache[key] = max(0, total - bipartite_max_flow(qx, qy, allowed)) / SCALE
            deficit = min(deficit, cache[key])
            if deficit == 0:
                break
        best = min(best, max(float(delta), deficit))
    return max(best, 0.0)


def box_upper_from_prokhorov(mu: MeasureOnSpace, nu: MeasureOnSpace) -> Flagged:
    """2 d_P(mu, nu), an upper bound for the box distance of the two
    measures on the shared metric."""
    return Flagged(2.0 * prokhorov_flow(mu, nu), Cert.UPPER)


@dataclass(frozen=True)
class MmIsoCertificate:
    map: tuple[int, ...]
    domain: tuple[int, ...]
    eps: float
    domain_exact: bool = True

    def box_bound(self) -> Flagged:
        return Flagged(3.0 * self.eps, Cert.UPPER)


def certify_mm_iso(f: Sequence[int], X: FiniteMmSpace, Y: FiniteMmSpace, eps: float,
                   exact_max: int = CERTIFY_EXACT_MAX) -> MmIsoCertificate | None:
    """Check whether ``f`` is an eps-mm-isomorphism from X to Y.

    The largest-mass domain on which f distorts distances by at most eps is
    found exactly for |X| <= exact_max (a max-weight independent set in the
    conflict graph) and greedily above. Returns None when no certificate
    exists for this map.
    """
    if eps < 0:
        raise InvalidParameter("eps must be nonnegative")
    f = np.asarray(f, dtype=int)
    if f.shape != (X.n,) or (f.size and (f.min() < 0 or f.max() >= Y.n)):
        raise InvalidParameter("map must send every point of X into Y")
    tol = METRIC_TOL * max(1.0, X.diameter(), Y.diameter())
    gap = _gap(Y.dist[np.ix_(f, f)], X.dist)
    conflict = gap > eps + tol
    if X.n <= exact_max:
        mass, dom = max_weight_independent_set(conflict, X.weight)
        exact = True
    else:
        mass, dom = greedy_independent_set(conflict, X.weight)
        exact = False
    if mass < 1 - eps - METRIC_TOL:
        return None
    image = np.zeros(Y.n)
    np.add.at(image, f, X.weight)
    if not prokhorov_at_most(MeasureOnSpace(Y, image, validate=False), MeasureOnSpace.of(Y), eps):
        return None
    return MmIsoCertificate(tuple(int(v) for v in f), tuple(dom), float(eps), exact)


def find_mm_iso(X: FiniteMmSpace, Y: FiniteMmSpace, eps: float,
                max_maps: int = 200_000) -> MmIsoCertificate | None:
    """Search all maps X -> Y for an eps-mm-isomorphism certificate."""
    if Y.n ** X.n > max_maps:
        raise ResourceLimit(f"{Y.n}^{X.n} maps exceed max_maps={max_maps}", "max_maps")
    for f in itertools.product(range(Y.n), repeat=X.n):
        cert = certify_mm_iso(f, X, Y, eps)
        if cert is not None:
            return cert
    return None
