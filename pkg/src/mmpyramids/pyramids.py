"""Finite stand-ins for pyramids: generator lists, atom vectors and direct sums.

A ``PyramidApprox`` built from generators stands for the pyramid of all
spaces dominated by its last generator. One built by ``direct_sum_pyramids``
stands for the direct sum of its parts; its generators are gapped sums that
belong to that direct sum and approach it as the gap grows. An atoms pyramid
stands for the pyramid generated by a weight vector.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .core import (
    ISO_TOL,
    METRIC_TOL,
    ExtendedFiniteMmSpace,
    FiniteMmSpace,
    PointedSpace,
    WeightVector,
    _as_a1,
    atoms_generator,
    direct_sum,
    gapped_sum,
    l1_distance,
    lipschitz_dominates,
    mm_isomorphic,
    one_point,
    scale,
)
from .distances import BOX_MAX_PAIRS, box_distance_exact
from .errors import InvalidParameter, Refusal, ResourceLimit
from .invariants import covering_number, obs_diameter, separation_distance
from .measures import prokhorov_points
from .results import Cert, CertifiedInterval, Flagged


@dataclass(frozen=True, eq=False)
class SumInfo:
    parts: tuple["PyramidApprox", ...]
    weights: WeightVector
    gaps: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class GapInfo:
    """The top generator is a gapped sum of these spaces."""

    parts: tuple[FiniteMmSpace, ...]
    weights: WeightVector
    gap: float


@dataclass(frozen=True, eq=False)
class PyramidApprox:
    generators: tuple[FiniteMmSpace, ...] | None = None
    atoms: WeightVector | None = None
    directed: bool = True
    sum_info: SumInfo | None = None
    gap_info: GapInfo | None = None

    def __post_init__(self):
        if (self.generators is None) == (self.atoms is None):
            raise InvalidParameter("give exactly one of generators or atoms")
        if self.generators is not None and len(self.generators) == 0:
            raise InvalidParameter("generator list must be nonempty")
        if self.atoms is not None and self.atoms.mode != "A":
            object.__setattr__(self, "atoms", WeightVector.atoms(self.atoms.entries))

    @classmethod
    def from_generators(cls, gens: Sequence[FiniteMmSpace], directed: bool = True) -> "PyramidApprox":
        return cls(generators=tuple(gens), directed=directed)

    @classmethod
    def of_space(cls, X: FiniteMmSpace) -> "PyramidApprox":
        return cls(generators=(X,))

    @classmethod
    def from_atoms(cls, A) -> "PyramidApprox":
        A = A if isinstance(A, WeightVector) else WeightVector.atoms(A)
        return cls(atoms=WeightVector.atoms(A.entries))

    @classmethod
    def gapped(cls, parts: Sequence, a, r: float) -> "PyramidApprox":
        """Pyramid of a gapped sum, remembering the parts for sum bounds."""
        pointed = [p if isinstance(p, PointedSpace) else PointedSpace(*p) if isinstance(p, tuple)
                   else PointedSpace(p, 0) for p in parts]
        a = _as_a1(a)
        Z = gapped_sum(pointed, a, r)
        info = GapInfo(tuple(p.space for p in pointed), a, float(r))
        return cls(generators=(Z,), gap_info=info)

    @property
    def kind(self) -> str:
        return "atoms" if self.atoms is not None else "generators"

    @property
    def top(self) -> FiniteMmSpace:
        self._need_generators()
        return self.generators[-1]

    def _need_generators(self) -> None:
        if self.generators is None:
            raise InvalidParameter("operation needs a generator representation")

    def verify_directed(self, max_points: int = 9) -> bool | None:
        """Check each generator is dominated by the next; None when too large."""
        self._need_generators()
        try:
            return all(lipschitz_dominates(b, a, max_points)
                       for a, b in zip(self.generators, self.generators[1:]))
        except ResourceLimit:
            return None


POINT = PyramidApprox.of_space(one_point())


def expand_atoms(P: PyramidApprox, levels: Sequence[int]) -> PyramidApprox:
    """Generator list of an atoms pyramid at the given gap levels."""
    if P.atoms is None:
        return P
    return PyramidApprox(generators=tuple(atoms_generator(P.atoms, int(math.ceil(k))) for k in levels))


def direct_sum_pyramids(parts: Sequence[PyramidApprox], a, gaps: Sequence[float] | None = None) -> PyramidApprox:
    """Direct sum of pyramids, approximated by gapped sums of the parts'
    generators: generator k glues the k-th generators with gap gaps[k]
    (default 1, 2, ..., K). Shorter generator lists repeat their last entry;
    atoms parts are expanded at the same gap levels and need ``gaps``."""
    a = _as_a1(a)
    if len(parts) != len(a) or not parts:
        raise InvalidParameter("parts and weights must have equal nonzero length")
    if len(parts) == 1:
        return parts[0]
    if gaps is None:
        if any(p.atoms is not None for p in parts):
            raise InvalidParameter("atoms parts need explicit gaps for expansion")
        K = max(len(p.generators) for p in parts)
        gaps = tuple(float(k) for k in range(1, K + 1))
    gaps = tuple(float(g) for g in gaps)
    if any(g <= 0 for g in gaps):
        raise InvalidParameter("gaps must be positive")
    expanded = [expand_atoms(p, gaps) for p in parts]
    gens = []
    for k, r in enumerate(gaps):
        level = [PointedSpace(p.generators[min(k, len(p.generators) - 1)], 0) for p in expanded]
        gens.append(gapped_sum(level, a, r))
    directed = all(p.directed for p in expanded)
    return PyramidApprox(generators=tuple(gens), directed=directed,
                         sum_info=SumInfo(tuple(parts), a, gaps))


def approximant(P: PyramidApprox, k: int) -> PyramidApprox:
    """The k-th generator of a direct-sum approximation as its own pyramid,
    carrying the gapped-sum structure."""
    if P.sum_info is None:
        raise InvalidParameter("pyramid is not a direct sum")
    info = P.sum_info
    gaps = info.gaps
    parts = []
    for p in info.parts:
        q = expand_atoms(p, gaps)
        parts.append(q.generators[min(k, len(q.generators) - 1)])
    return PyramidApprox(generators=(P.generators[k],),
                         gap_info=GapInfo(tuple(parts), info.weights, gaps[k]))


# ------------------------------------------------------------ measurements

@dataclass(frozen=True)
class CubeMeasure:
    """Atomic probability measure in (R^N, l_inf)."""

    points: np.ndarray
    mass: np.ndarray

    def key(self) -> tuple:
        return (self.points.shape, self.points.tobytes(), self.mass.tobytes())


@dataclass(frozen=True)
class MeasurementSample:
    N: int
    R: float
    measures: tuple[CubeMeasure, ...]


def _image_measure(F: np.ndarray, w: np.ndarray) -> CubeMeasure:
    pts, inv = np.unique(F, axis=0, return_inverse=True)
    mass = np.zeros(len(pts))
    np.add.at(mass, inv.ravel(), w)
    pts.setflags(write=False)
    mass.setflags(write=False)
    return CubeMeasure(pts, mass)


def canonical_map_count(X: FiniteMmSpace, max_anchors: int = 16) -> int:
    return 1 + min(X.n, max_anchors)


def measurement_sample(P: PyramidApprox, N: int, R: float, budget: int, seed: int = 0,
                       max_anchors: int = 16) -> MeasurementSample:
    """Pushforwards of each generator under 1-Lipschitz maps into the l_inf
    cube of radius R in R^N.

    Per generator: the constant map, one anchor map per anchor point
    (coordinate i is clip(d(x, a_i) - R) over consecutive anchors), then
    seeded McShane extensions of random values up to ``budget`` maps.
    Identical measures are kept once.
    """
    if N < 1 or not R > 0:
        raise InvalidParameter("need N >= 1 and R > 0")
    P = expand_atoms(P, [max(1, math.ceil(2 * R))])
    rng = np.random.default_rng(seed)
    out: dict[tuple, CubeMeasure] = {}
    for X in P.generators:
        need = canonical_map_count(X, max_anchors)
        if budget < need:
            raise InvalidParameter(f"budget {budget} below the {need} canonical maps")
        d = X.dist
        w = np.asarray(X.weight)
        n = X.n
        maps = [np.zeros((n, N))]
        anchors = np.unique(np.linspace(0, n - 1, min(n, max_anchors)).round().astype(int))
        for s in range(len(anchors)):
            cols = [anchors[(s + i) % len(anchors)] for i in range(N)]
            maps.append(np.clip(d[:, cols] - R, -R, R))
        while len(maps) < budget:
            F = np.empty((n, N))
            for i in range(N):
                k = int(rng.integers(1, n + 1))
                S = rng.choice(n, size=k, replace=False)
                g = rng.uniform(-R, R, size=k)
                F[:, i] = np.min(g[None, :] + d[:, S], axis=1)
            maps.append(np.clip(F, -R, R))
        tol = METRIC_TOL * max(1.0, X.diameter())
        for F in maps:
            spread = np.abs(F[:, None, :] - F[None, :, :]).max(axis=2)
            assert np.all(spread <= d + tol), "map is not 1-Lipschitz"
            assert np.all(np.abs(F) <= R), "map leaves the cube"
            m = _image_measure(F, w)
            out.setdefault(m.key(), m)
    return MeasurementSample(N, float(R), tuple(out.values()))


def _directed_hausdorff(A: Sequence[CubeMeasure], B: Sequence[CubeMeasure]) -> float:
    worst = 0.0
    for m in A:
        best = math.inf
        for q in B:
            v = prokhorov_points(m.points, m.mass, q.points, q.mass)
            best = min(best, v)
            if best <= worst:
                break
        worst = max(worst, best)
    return worst


def hausdorff_prokhorov(A: Sequence[CubeMeasure], B: Sequence[CubeMeasure]) -> float:
    return max(_directed_hausdorff(A, B), _directed_hausdorff(B, A))


def rho_empirical(P: PyramidApprox, Q: PyramidApprox, N_max: int = 2, budget: int = 24,
                  seed: int = 0) -> Flagged:
    """Truncated rho series on finite measurement samples. Uncertified: the
    samples are subsets of the true measurement sets."""
    total = 0.0
    for N in range(1, N_max + 1):
        bP = max(budget, _min_budget(P, N))
        bQ = max(budget, _min_budget(Q, N))
        SP = measurement_sample(P, N, N, bP, seed)
        SQ = measurement_sample(Q, N, N, bQ, seed)
        total += hausdorff_prokhorov(SP.measures, SQ.measures) / (2 ** N * 2 * N)
    return Flagged(total, Cert.ESTIMATE)


def _min_budget(P: PyramidApprox, N: int) -> int:
    P = expand_atoms(P, [max(1, 2 * N)])
    return max(canonical_map_count(X) for X in P.generators)


# ------------------------------------------------------------ rho upper bounds

def _same_pyramid(P: PyramidApprox, Q: PyramidApprox) -> bool:
    if P is Q:
        return True
    if P.atoms is not None and Q.atoms is not None:
        return l1_distance(P.atoms, Q.atoms) == 0
    return False


def _point_if_trivial(P: PyramidApprox) -> PyramidApprox:
    # the atoms pyramid of (1) is the one-point pyramid
    if P.atoms is not None and len(P.atoms) == 1 and abs(P.atoms[0] - 1) <= METRIC_TOL:
        return POINT
    return P


def _as_sum(P: PyramidApprox):
    """(parts, weights) when P is a genuine direct sum of pyramids."""
    if P.sum_info is not None:
        return list(P.sum_info.parts), list(P.sum_info.weights)
    if P.atoms is not None and abs(P.atoms.norm() - 1) <= METRIC_TOL * max(1, len(P.atoms)):
        return [POINT] * len(P.atoms), list(P.atoms)
    if P.generators is not None and P.gap_info is None and P.top.n == 1:
        return [POINT], [1.0]
    return None


def _sum_bound(parts_a, a, parts_b, b, budget, depth, extra=0.0) -> float:
    """min over M of sum_{n<=M} rho(P_n, Q_n) + |A-B|/2 + tails/2 + extra."""
    best = math.inf
    half_l1 = 0.5 * l1_distance(a, b)
    acc = 0.0
    for M in range(1, min(len(a), len(b)) + 1):
        try:
            acc += _rho_upper(parts_a[M - 1], parts_b[M - 1], budget, depth + 1)
        except Refusal:
            break
        tail = 0.5 * math.fsum(a[M:]) + 0.5 * math.fsum(b[M:])
        best = min(best, acc + half_l1 + tail + extra)
    return best


def _rho_upper(P: PyramidApprox, Q: PyramidApprox, budget: int, depth: int) -> float:
    if depth > 8:
        raise Refusal("recursion too deep")
    P, Q = _point_if_trivial(P), _point_if_trivial(Q)
    if _same_pyramid(P, Q):
        return 0.0
    bounds = []
    if P.atoms is not None and Q.atoms is not None:
        bounds.append(l1_distance(P.atoms, Q.atoms))
    plain_p = P.generators is not None and P.sum_info is None
    plain_q = Q.generators is not None and Q.sum_info is None
    if plain_p and plain_q:
        X, Y = P.top, Q.top
        if X.n == Y.n:
            try:
                if mm_isomorphic(X, Y):
                    bounds.append(0.0)
            except ResourceLimit:
                pass
        if X.n * Y.n <= budget:
            bounds.append(box_distance_exact(X, Y, budget))
    sp, sq = _as_sum(P), _as_sum(Q)
    if sp and sq:
        bounds.append(_sum_bound(sp[0], sp[1], sq[0], sq[1], budget, depth))
    for G, S in ((P, sq), (Q, sp)):
        if G.gap_info is not None and S is not None:
            parts = [PyramidApprox.of_space(X) for X in G.gap_info.parts]
            tail = 2.0 ** (-G.gap_info.gap / 2)
            bounds.append(_sum_bound(parts, list(G.gap_info.weights), S[0], S[1], budget, depth, tail))
    bounds = [b for b in bounds if math.isfinite(b)]
    if not bounds:
        raise Refusal("no upper-bound rule applies to this pair")
    return min(bounds)


def rho_upper(P: PyramidApprox, Q: PyramidApprox, budget: int = BOX_MAX_PAIRS) -> Flagged:
    """Upper bound for rho(P, Q): the least of the box distance between top
    generators, the l1 distance of atom vectors, the direct-sum bound, and
    the gapped-sum bound with its 2^(-r/2) term. Raises Refusal when none
    applies."""
    return Flagged(_rho_upper(P, Q, budget, 0), Cert.UPPER)


# ------------------------------------------------------------ atoms limit

def cluster_masses(X: FiniteMmSpace, radius: float) -> np.ndarray:
    """Masses of single-linkage clusters at distance <= radius, nonincreasing."""
    adj = csr_matrix(X.dist <= radius)
    k, lab = connected_components(adj, directed=False)
    mass = np.zeros(k)
    np.add.at(mass, lab, X.weight)
    return np.sort(mass)[::-1]


def default_t_grid(P: PyramidApprox) -> tuple[float, ...]:
    P_ = expand_atoms(P, [4, 8, 16])
    gens = P_.generators
    if len(gens) == 1:
        D = max(gens[0].diameter(), 1.0)
        return (1e-2 / D ** 2, 1e-4 / D ** 2)
    return tuple(1.0 / max(X.diameter(), 1.0) for X in gens)


def atoms_limit_of_scaling(P: PyramidApprox, t_grid: Sequence[float] | None = None,
                           tol: float = 1e-9) -> Flagged:
    """Finite shadow of the scaling limit of P as t -> 0.

    Scale generator j by t_j (the last generator is reused past the end of
    the list), cluster at radius sqrt(t_j), and sort the cluster masses.
    The answer is the common leading part of the last two mass vectors; the
    masses after it must shrink from one scale to the next, otherwise the
    grid has not stabilized and Refusal is raised.
    """
    gens = expand_atoms(P, [4, 8, 16]).generators
    grid = tuple(default_t_grid(P) if t_grid is None else t_grid)
    if len(grid) < 2:
        raise InvalidParameter("need at least two scales")
    if any(not t > 0 for t in grid) or any(a <= b for a, b in zip(grid, grid[1:])):
        raise InvalidParameter("t_grid must be positive and strictly decreasing")
    vectors = []
    for j, t in enumerate(grid):
        X = gens[min(j, len(gens) - 1)]
        vectors.append(cluster_masses(scale(X, t), math.sqrt(t)))
    prev, last = vectors[-2], vectors[-1]
    k = 0
    while k < min(len(prev), len(last)) and abs(prev[k] - last[k]) <= tol:
        k += 1
    rest_prev = prev[k] if k < len(prev) else 0.0
    rest_last = last[k] if k < len(last) else 0.0
    if rest_last > 0 and not rest_last < rest_prev:
        raise Refusal(
            f"scales did not stabilize: leading masses {prev[:k + 1].tolist()} vs "
            f"{last[:k + 1].tolist()}"
        )
    entries = tuple(float(x) for x in last[:k])
    return Flagged(WeightVector.atoms(entries), Cert.ESTIMATE, f"tol={tol}")


# ------------------------------------------------------------ decomposition

def canonical_form(X: FiniteMmSpace, digits: int = 9, max_perms: int = 200_000) -> tuple:
    """Isomorphism-invariant encoding: the lexicographically least
    (weights, distances) listing over orderings that respect each point's
    weight and sorted distance profile."""
    w = np.round(np.asarray(X.weight), digits)
    d = np.round(X.dist, digits)
    sig = [(w[i], tuple(np.sort(d[i]))) for i in range(X.n)]
    order = sorted(range(X.n), key=lambda i: sig[i])
    classes = [list(g) for _, g in itertools.groupby(order, key=lambda i: sig[i])]
    count = math.prod(math.factorial(len(c)) for c in classes)
    if count > max_perms:
        raise ResourceLimit(f"canonical form needs {count} orderings, above max_perms={max_perms}",
                            "max_perms")
    best = None
    for choice in itertools.product(*(itertools.permutations(c) for c in classes)):
        perm = [i for block in choice for i in block]
        key = tuple(d[np.ix_(perm, perm)][np.triu_indices(X.n, 1)].tolist())
        if best is None or key < best:
            best = key
    return (tuple(s for s in sorted(sig)), best)


@dataclass(frozen=True)
class DecompositionResult:
    weights: WeightVector
    parts: tuple[FiniteMmSpace, ...]
    keys: tuple = field(default=(), compare=False)
    indices: tuple = field(default=(), compare=False)

    def reassemble(self) -> ExtendedFiniteMmSpace:
        return direct_sum(list(self.parts), self.weights)


def decompose_extended(Z: FiniteMmSpace) -> DecompositionResult:
    """Split an extended space into its finite-distance components.

    Parts are ordered by decreasing mass, ties broken by canonical form.
    """
    fin = csr_matrix(np.isfinite(Z.dist))
    k, lab = connected_components(fin, directed=False)
    items = []
    for c in range(k):
        idx = np.flatnonzero(lab == c)
        m = float(np.asarray(Z.weight)[idx].sum())
        part = FiniteMmSpace(Z.dist[np.ix_(idx, idx)], np.asarray(Z.weight)[idx] / m,
                             [Z.labels[i] for i in idx])
        items.append((m, canonical_form(part), part, tuple(idx.tolist())))
    items.sort(key=lambda it: (-round(it[0], 12), it[1]))
    masses = [it[0] for it in items]
    s = math.fsum(masses)
    return DecompositionResult(
        WeightVector(tuple(m / s for m in masses), "A1"),
        tuple(it[2] for it in items),
        tuple(it[1] for it in items),
        tuple(it[3] for it in items),
    )


def same_decomposition(D1: DecompositionResult, D2: DecompositionResult, tol: float = ISO_TOL) -> bool:
    """Equal weight multisets and a weight-preserving matching of isomorphic parts."""
    if len(D1.parts) != len(D2.parts):
        return False
    used = [False] * len(D2.parts)
    for a, X in zip(D1.weights, D1.parts):
        for j, (b, Y) in enumerate(zip(D2.weights, D2.parts)):
            if not used[j] and abs(a - b) <= tol and mm_isomorphic(X, Y, tol):
                used[j] = True
                break
        else:
            return False
    return True


# ------------------------------------------------------------ pyramid invariants

def _generator_list(P: PyramidApprox) -> tuple[FiniteMmSpace, ...]:
    if P.generators is None:
        raise InvalidParameter("expand atoms pyramids with expand_atoms first")
    return P.generators


def sep_of_pyramid(P: PyramidApprox, kappas: Sequence[float]) -> Flagged:
    vals = [separation_distance(X, kappas) for X in _generator_list(P)]
    return Flagged(max(vals), Cert.LOWER)


def obsdiam_of_pyramid(P: PyramidApprox, kappa: float, seed: int = 0) -> CertifiedInterval:
    """Join over generators; the lower end bounds the pyramid value from below,
    the upper end bounds only the listed generators."""
    ivs = [obs_diameter(X, kappa, seed) for X in _generator_list(P)]
    lo = max(iv.lower for iv in ivs)
    hi = max(iv.upper for iv in ivs)
    return CertifiedInterval(lo, hi, "max over generators", "max over generators")


@dataclass(frozen=True)
class CoverTrend:
    value: Flagged
    per_generator: tuple[int, ...]
    diverging: bool


def cov_of_pyramid(P: PyramidApprox, r: float, kappa: float) -> CoverTrend:
    """Max of covering numbers over generators (a lower bound), with a
    divergence flag raised when the values keep strictly increasing along
    the last three generators."""
    vals = tuple(covering_number(X, r, kappa) for X in _generator_list(P))
    tail = vals[-3:]
    diverging = len(tail) >= 3 and all(a < b for a, b in zip(tail, tail[1:]))
    return CoverTrend(Flagged(max(vals), Cert.LOWER), vals, diverging)
