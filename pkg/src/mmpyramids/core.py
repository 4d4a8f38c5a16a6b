"""Finite mm-spaces, their constructions, and order/isomorphism decisions."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, NamedTuple, Sequence

import numpy as np

from .errors import InvalidParameter, ResourceLimit

METRIC_TOL = 1e-12
ISO_TOL = 1e-9
DOMINATION_MAX_POINTS = 9
INF = math.inf


def _metric_tol(d: np.ndarray) -> float:
    finite = d[np.isfinite(d)]
    scale = float(finite.max()) if finite.size else 0.0
    return METRIC_TOL * max(1.0, scale)


class FiniteMmSpace:
    """A finite metric space with a strictly positive probability measure.

    Distances are stored as ``unit * base``; scaling only touches ``unit``,
    so scaling invariants can be computed on ``base`` and multiplied once.
    Zero-weight points are pruned on construction.
    """

    extended = False

    def __init__(self, dist, weight=None, labels=None, *, unit: float = 1.0,
                 validate: bool = True):
        base = np.array(dist, dtype=float)
        if base.ndim != 2 or base.shape[0] != base.shape[1] or base.shape[0] == 0:
            raise InvalidParameter("dist must be a nonempty square matrix")
        n = base.shape[0]
        w = np.full(n, 1.0 / n) if weight is None else np.array(weight, dtype=float).ravel()
        if w.shape != (n,):
            raise InvalidParameter("weight length does not match dist")
        labels = list(range(n)) if labels is None else list(labels)
        if len(labels) != n:
            raise InvalidParameter("labels length does not match dist")
        if validate:
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise InvalidParameter("weights must be nonnegative and finite")
            keep = w > 0
            if not keep.all():
                idx = np.flatnonzero(keep)
                base = base[np.ix_(idx, idx)]
                w = w[idx]
                labels = [labels[i] for i in idx]
            if len(w) == 0:
                raise InvalidParameter("all weights are zero")
            if abs(w.sum() - 1.0) > METRIC_TOL * max(1, len(w)):
                raise InvalidParameter(f"weights sum to {w.sum()!r}, not 1")
            if not (unit > 0 and math.isfinite(unit)):
                raise InvalidParameter("unit must be positive and finite")
            self._check_metric(base)
        base.setflags(write=False)
        w.setflags(write=False)
        self._base = base
        self._weight = w
        self._labels = tuple(labels)
        self._unit = float(unit)
        self._dist = None

    def _check_metric(self, d: np.ndarray) -> None:
        if np.any(np.isnan(d)):
            raise InvalidParameter("dist contains NaN")
        if not self.extended and not np.all(np.isfinite(d)):
            raise InvalidParameter("dist contains infinite entries; use ExtendedFiniteMmSpace")
        if np.any(d < 0):
            raise InvalidParameter("dist has negative entries")
        if np.any(np.diag(d) != 0):
            raise InvalidParameter("dist diagonal must be zero")
        if not np.array_equal(d, d.T):
            if np.allclose(d, d.T, rtol=0, atol=_metric_tol(d)):
                d[...] = np.minimum(d, d.T)
            else:
                raise InvalidParameter("dist is not symmetric")
        tol = _metric_tol(d)
        with np.errstate(invalid="ignore"):
            for k in range(d.shape[0]):
                via = d[:, k:k + 1] + d[k:k + 1, :]
                if np.any(d > via + tol):
                    raise InvalidParameter("dist violates the triangle inequality")

    # basic accessors
    @property
    def n(self) -> int:
        return len(self._weight)

    def __len__(self) -> int:
        return self.n

    @property
    def base(self) -> np.ndarray:
        return self._base

    @property
    def unit(self) -> float:
        return self._unit

    @property
    def dist(self) -> np.ndarray:
        if self._dist is None:
            d = self._base if self._unit == 1.0 else self._unit * self._base
            if d is self._base:
                self._dist = d
            else:
                d.setflags(write=False)
                self._dist = d
        return self._dist

    @property
    def weight(self) -> np.ndarray:
        return self._weight

    @property
    def labels(self) -> tuple:
        return self._labels

    def diameter(self) -> float:
        return float(self.dist.max()) if self.n > 1 else 0.0

    def __repr__(self) -> str:
        kind = type(self).__name__
        return f"{kind}(n={self.n}, diam={self.diameter():g})"

    def _rebuild(self, base, weight, labels, unit=1.0, validate=False):
        cls = type(self)
        return cls(base, weight, labels, unit=unit, validate=validate)


class ExtendedFiniteMmSpace(FiniteMmSpace):
    """Finite mm-space whose distances may be ``math.inf``."""

    extended = True

    def components(self) -> list[np.ndarray]:
        """Index arrays of the classes of the relation d < inf, in first-seen order."""
        finite = np.isfinite(self.base)
        seen = np.zeros(self.n, dtype=bool)
        out = []
        for i in range(self.n):
            if not seen[i]:
                idx = np.flatnonzero(finite[i])
                seen[idx] = True
                out.append(idx)
        return out


@dataclass(frozen=True)
class WeightVector:
    """Finite weight sequence. Mode ``"A1"`` sums to one; mode ``"A"`` is
    nonincreasing with sum at most one (empty means the zero vector)."""

    entries: tuple[float, ...]
    mode: str = "A1"

    def __post_init__(self):
        e = tuple(float(x) for x in self.entries)
        object.__setattr__(self, "entries", e)
        if self.mode not in ("A1", "A"):
            raise InvalidParameter(f"unknown weight mode {self.mode!r}")
        if any(not (0 < x <= 1 + METRIC_TOL) for x in e):
            raise InvalidParameter("weight entries must lie in (0, 1]")
        s = math.fsum(e)
        if self.mode == "A1":
            if abs(s - 1) > METRIC_TOL * max(1, len(e)):
                raise InvalidParameter(f"A1 weights must sum to 1, got {s!r}")
        else:
            if s > 1 + METRIC_TOL * max(1, len(e)):
                raise InvalidParameter("A weights must sum to at most 1")
            if any(e[i] < e[i + 1] for i in range(len(e) - 1)):
                raise InvalidParameter("A weights must be nonincreasing")

    @classmethod
    def atoms(cls, entries: Sequence[float]) -> "WeightVector":
        """Mode A vector from arbitrary positive entries (sorted, zeros dropped)."""
        return cls(tuple(sorted((float(x) for x in entries if x > 0), reverse=True)), "A")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def norm(self) -> float:
        return math.fsum(self.entries)

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)


def l1_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """l1 distance with the shorter vector padded by zeros."""
    a, b = list(a), list(b)
    k = max(len(a), len(b))
    a += [0.0] * (k - len(a))
    b += [0.0] * (k - len(b))
    return math.fsum(abs(x - y) for x, y in zip(a, b))


def _as_a1(a) -> WeightVector:
    return a if isinstance(a, WeightVector) and a.mode == "A1" else WeightVector(tuple(a), "A1")


class PointedSpace(NamedTuple):
    space: FiniteMmSpace
    base: int = 0

    def checked(self) -> "PointedSpace":
        if not 0 <= self.base < self.space.n:
            raise InvalidParameter(f"base index {self.base} out of range")
        return self


def _pointed(p) -> PointedSpace:
    if isinstance(p, FiniteMmSpace):
        return PointedSpace(p, 0)
    return PointedSpace(*p).checked()


# ----------------------------------------------------------------- basic spaces

def one_point(label: Any = 0) -> FiniteMmSpace:
    return FiniteMmSpace([[0.0]], [1.0], [label])


def two_point(length: float, weights=(0.5, 0.5)) -> FiniteMmSpace:
    if length <= 0:
        raise InvalidParameter("two-point length must be positive")
    return FiniteMmSpace([[0.0, length], [length, 0.0]], list(weights))


def dissipation_space(n: int) -> FiniteMmSpace:
    """n points at mutual distance n with uniform weights."""
    if n < 1:
        raise InvalidParameter("n must be at least 1")
    d = np.full((n, n), float(n))
    np.fill_diagonal(d, 0.0)
    return FiniteMmSpace(d, np.full(n, 1.0 / n), validate=False)


def cycle_space(m: int, circumference: float = 2 * math.pi) -> FiniteMmSpace:
    """m equally spaced points on a circle with the geodesic metric."""
    if m < 1:
        raise InvalidParameter("m must be at least 1")
    i = np.arange(m)
    k = np.abs(i[:, None] - i[None, :])
    steps = np.minimum(k, m - k)
    return FiniteMmSpace(steps * (circumference / m), np.full(m, 1.0 / m))


# ---------------------------------------------------------------- constructions

def scale(X: FiniteMmSpace, t: float) -> FiniteMmSpace:
    if not t > 0 or not math.isfinite(t):
        raise InvalidParameter("scale factor must be positive and finite")
    return X._rebuild(X.base, X.weight, X.labels, unit=X.unit * t)


def restrict_normalize(X: FiniteMmSpace, A) -> FiniteMmSpace:
    idx = np.unique(np.asarray(list(A), dtype=int))
    if idx.size == 0:
        raise InvalidParameter("subset must be nonempty")
    if idx.min() < 0 or idx.max() >= X.n:
        raise InvalidParameter("subset index out of range")
    w = X.weight[idx]
    w = w / w.sum()
    return X._rebuild(X.base[np.ix_(idx, idx)], w, [X.labels[i] for i in idx], unit=X.unit)


def _lp_combine(a: np.ndarray, b: np.ndarray, p: float) -> np.ndarray:
    if p == 1:
        return a + b
    if p == 2:
        return np.hypot(a, b)
    if math.isinf(p):
        return np.maximum(a, b)
    with np.errstate(over="ignore"):
        return (a ** p + b ** p) ** (1.0 / p)


def _check_p(p: float) -> float:
    p = float(p)
    if math.isnan(p) or p < 1:
        raise InvalidParameter("p must be >= 1 or inf")
    return p


def lp_product(X: FiniteMmSpace, Y: FiniteMmSpace, p: float) -> FiniteMmSpace:
    """Point (i, j) has index i*|Y| + j."""
    p = _check_p(p)
    dx = np.repeat(np.repeat(X.dist, Y.n, axis=0), Y.n, axis=1)
    dy = np.tile(Y.dist, (X.n, X.n))
    d = _lp_combine(dx, dy, p)
    w = np.outer(X.weight, Y.weight).ravel()
    labels = [(a, b) for a in X.labels for b in Y.labels]
    cls = ExtendedFiniteMmSpace if (X.extended or Y.extended) else FiniteMmSpace
    return cls(d, w, labels, validate=False)


def lp_power(X: FiniteMmSpace, p: float, n: int, max_points: int = 4096) -> FiniteMmSpace:
    p = _check_p(p)
    if n < 1:
        raise InvalidParameter("n must be at least 1")
    if X.n ** n > max_points:
        raise ResourceLimit(f"|X|^n = {X.n ** n} exceeds max_points={max_points}", "max_points")
    out = X
    for _ in range(n - 1):
        out = lp_product(out, X, p)
    return out


def direct_sum(parts: Sequence[FiniteMmSpace], a) -> ExtendedFiniteMmSpace:
    """Disjoint union with infinite inter-part distances; labels are (part, label).

    Extended parts are allowed; their own infinite distances are kept.
    """
    a = _as_a1(a)
    if len(parts) != len(a) or not parts:
        raise InvalidParameter("parts and weights must have equal nonzero length")
    sizes = [P.n for P in parts]
    total = sum(sizes)
    d = np.full((total, total), INF)
    w = np.empty(total)
    labels = []
    off = 0
    for k, (P, ak) in enumerate(zip(parts, a)):
        sl = slice(off, off + P.n)
        d[sl, sl] = P.dist
        w[sl] = ak * P.weight
        labels.extend((k, lab) for lab in P.labels)
        off += P.n
    w = w / w.sum()
    return ExtendedFiniteMmSpace(d, w, labels, validate=False)


def gapped_sum(parts, a, r: float) -> FiniteMmSpace:
    """Parts glued through their base points with an extra gap r between parts."""
    if not r > 0 or not math.isfinite(r):
        raise InvalidParameter("gap r must be positive and finite")
    parts = [_pointed(p) for p in parts]
    a = _as_a1(a)
    if len(parts) != len(a) or not parts:
        raise InvalidParameter("parts and weights must have equal nonzero length")
    if any(p.space.extended for p in parts):
        raise InvalidParameter("gapped_sum needs finite parts")
    to_base = np.concatenate([p.space.dist[:, p.base] for p in parts])
    which = np.concatenate([np.full(p.space.n, k) for k, p in enumerate(parts)])
    d = to_base[:, None] + to_base[None, :] + r
    off = 0
    for p in parts:
        sl = slice(off, off + p.space.n)
        d[sl, sl] = p.space.dist
        off += p.space.n
    w = np.concatenate([ak * p.space.weight for ak, p in zip(a, parts)])
    w = w / w.sum()
    labels = [(k, lab) for k, p in enumerate(parts) for lab in p.space.labels]
    cross = which[:, None] != which[None, :]
    assert not np.any(d[cross] < r), "inter-part distance below gap"
    return FiniteMmSpace(d, w, labels, validate=False)


def wedge_sum(Xp, Yp, alpha: float) -> FiniteMmSpace:
    """Glue the base points; the merged point comes first in X's block."""
    if not 0 < alpha < 1:
        raise InvalidParameter("alpha must lie in (0, 1)")
    X, x0 = _pointed(Xp)
    Y, y0 = _pointed(Yp)
    yrest = [j for j in range(Y.n) if j != y0]
    n = X.n + len(yrest)
    d = np.empty((n, n))
    d[:X.n, :X.n] = X.dist
    dyr = Y.dist[np.ix_(yrest, yrest)]
    d[X.n:, X.n:] = dyr
    cross = X.dist[:, x0][:, None] + Y.dist[yrest, y0][None, :]
    d[:X.n, X.n:] = cross
    d[X.n:, :X.n] = cross.T
    w = np.concatenate([alpha * X.weight, (1 - alpha) * Y.weight[yrest]])
    w[x0] += (1 - alpha) * Y.weight[y0]
    w = w / w.sum()
    labels = [("X", lab) for lab in X.labels] + [("Y", Y.labels[j]) for j in yrest]
    return FiniteMmSpace(d, w, labels, validate=False)


def atoms_generator(A, n: int) -> FiniteMmSpace:
    """One-point parts with weights A plus a dissipation space of weight 1 - |A|,
    glued with gap n."""
    if n < 1:
        raise InvalidParameter("n must be at least 1")
    A = A if isinstance(A, WeightVector) else WeightVector.atoms(A)
    rest = 1.0 - A.norm()
    parts: list[PointedSpace] = []
    weights: list[float] = []
    if rest > METRIC_TOL * max(1, len(A)):
        parts.append(PointedSpace(dissipation_space(n), 0))
        weights.append(rest)
    for k, ak in enumerate(A):
        parts.append(PointedSpace(one_point(k), 0))
        weights.append(ak)
    s = math.fsum(weights)
    weights = [x / s for x in weights]
    if len(parts) == 1:
        return parts[0].space
    return gapped_sum(parts, WeightVector(tuple(weights), "A1"), float(n))


# ---------------------------------------------------------------- decisions

class Decision(NamedTuple):
    holds: bool
    witness: Any = None

    def __bool__(self) -> bool:
        return self.holds


def lipschitz_dominates(X: FiniteMmSpace, Y: FiniteMmSpace, max_points: int = DOMINATION_MAX_POINTS) -> Decision:
    """Decide Y < X: is there a 1-Lipschitz f: X -> Y with f_* mu_X = mu_Y?

    Witness is the map as a tuple of Y indices. Search order: X points by
    descending weight, Y candidates in index order.
    """
    if X.n > max_points:
        raise ResourceLimit(f"|X| = {X.n} exceeds max_points={max_points}", "max_points")
    if Y.n > X.n:
        return Decision(False)
    dX, dY = X.dist, Y.dist
    wX, wY = X.weight, Y.weight
    tol = METRIC_TOL * max(1.0, float(np.nanmax(np.where(np.isfinite(dX), dX, 0))),
                           float(np.nanmax(np.where(np.isfinite(dY), dY, 0))))
    order = sorted(range(X.n), key=lambda i: (-wX[i], i))
    m = Y.n
    full = (1 << m) - 1
    # ok[y][i][j]: bitmask of y' allowed for x_j when x_i -> y
    ok = [[[0] * X.n for _ in range(X.n)] for _ in range(m)]
    for y in range(m):
        for i in range(X.n):
            for j in range(X.n):
                bits = 0
                for y2 in range(m):
                    if dY[y, y2] <= dX[i, j] + tol:
                        bits |= 1 << y2
                ok[y][i][j] = bits
    residual = wY.astype(float).copy()
    assign = [-1] * X.n

    def rec(k: int, domains: list[int]) -> bool:
        if k == X.n:
            return bool(np.all(np.abs(residual) <= METRIC_TOL))
        # every Y atom with mass left must remain reachable
        reach = 0
        for j in order[k:]:
            reach |= domains[j]
        need = 0
        for y in range(m):
            if residual[y] > METRIC_TOL:
                need |= 1 << y
        if need & ~reach:
            return False
        x = order[k]
        dom = domains[x]
        for y in range(m):
            if not dom >> y & 1 or residual[y] < wX[x] - METRIC_TOL:
                continue
            new = list(domains)
            dead = False
            for j in order[k + 1:]:
                new[j] &= ok[y][x][j]
                if not new[j]:
                    dead = True
                    break
            if dead:
                continue
            assign[x] = y
            residual[y] -= wX[x]
            if rec(k + 1, new):
                return True
            residual[y] += wX[x]
            assign[x] = -1
        return False

    if rec(0, [full] * X.n):
        return Decision(True, tuple(assign))
    return Decision(False)


def _pushforward_mass(weights: np.ndarray, f: Sequence[int], m: int) -> np.ndarray:
    out = np.zeros(m)
    np.add.at(out, np.asarray(f, dtype=int), weights)
    return out


def lipschitz_dominates_eps(X: FiniteMmSpace, Y: FiniteMmSpace, eps: float,
                            max_points: int = DOMINATION_MAX_POINTS, max_maps: int = 200_000) -> Decision:
    """Decide whether Y is eps-dominated by X.

    Needs a map f and a domain of mass >= 1 - eps on which f expands distances
    by at most eps, with d_P(f_* mu_X, mu_Y) <= eps. Witness is (map, domain).
    """
    from .measures import MeasureOnSpace, prokhorov_at_most
    from ._search import max_weight_independent_set

    if eps < 0:
        raise InvalidParameter("eps must be nonnegative")
    if eps == 0:
        dec = lipschitz_dominates(X, Y, max_points)
        return Decision(True, (dec.witness, tuple(range(X.n)))) if dec else dec
    if X.n > max_points:
        raise ResourceLimit(f"|X| = {X.n} exceeds max_points={max_points}", "max_points")
    if Y.n ** X.n > max_maps:
        raise ResourceLimit(f"{Y.n}^{X.n} maps exceed max_maps={max_maps}", "max_maps")
    dec = lipschitz_dominates(X, Y, max_points) if Y.n <= X.n else Decision(False)
    if dec:
        return Decision(True, (dec.witness, tuple(range(X.n))))
    dX, dY = X.dist, Y.dist
    target = MeasureOnSpace(Y, Y.weight)
    prok_cache: dict[tuple, bool] = {}
    for f in itertools.product(range(Y.n), repeat=X.n):
        img = _pushforward_mass(X.weight, f, Y.n)
        key = tuple(np.round(img, 14))
        ok = prok_cache.get(key)
        if ok is None:
            ok = prokhorov_at_most(MeasureOnSpace(Y, img, validate=False), target, eps)
            prok_cache[key] = ok
        if not ok:
            continue
        fa = np.asarray(f)
        conflict = dY[np.ix_(fa, fa)] > dX + eps + METRIC_TOL
        mass, dom = max_weight_independent_set(conflict, X.weight)
        if mass >= 1 - eps - METRIC_TOL:
            return Decision(True, (tuple(f), tuple(dom)))
    return Decision(False)


def _close(a: float, b: float, tol: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol


def mm_isomorphic(X: FiniteMmSpace, Y: FiniteMmSpace, tol: float = ISO_TOL,
                  max_nodes: int = 2_000_000) -> Decision:
    """Search a bijection matching weights and distances within ``tol``.

    Witness is a tuple ``perm`` with X point i sent to Y point perm[i].
    The budget is on search nodes; candidates are pruned by weight and by the
    sorted distance profile of each point.
    """
    if X.n != Y.n:
        return Decision(False)
    n = X.n
    dX, dY = X.dist, Y.dist
    wX, wY = X.weight, Y.weight
    sx = np.sort(dX, axis=1)
    sy = np.sort(dY, axis=1)

    def rows_close(a, b):
        fa, fb = np.isfinite(a), np.isfinite(b)
        if not np.array_equal(fa, fb):
            return False
        return bool(np.all(np.abs(a[fa] - b[fb]) <= tol))

    cand = []
    for i in range(n):
        c = [j for j in range(n) if abs(wX[i] - wY[j]) <= tol and rows_close(sx[i], sy[j])]
        if not c:
            return Decision(False)
        cand.append(c)
    order = sorted(range(n), key=lambda i: (len(cand[i]), i))
    used = [False] * n
    perm = [-1] * n
    nodes = 0

    def rec(k: int) -> bool:
        nonlocal nodes
        if k == n:
            return True
        x = order[k]
        for y in cand[x]:
            if used[y]:
                continue
            nodes += 1
            if nodes > max_nodes:
                raise ResourceLimit(f"isomorphism search exceeded max_nodes={max_nodes}", "max_nodes")
            good = True
            for j in order[:k]:
                if not _close(dX[x, j], dY[y, perm[j]], tol):
                    good = False
                    break
            if not good:
                continue
            used[y] = True
            perm[x] = y
            if rec(k + 1):
                return True
            used[y] = False
            perm[x] = -1
        return False

    if rec(0):
        return Decision(True, tuple(perm))
    return Decision(False)
