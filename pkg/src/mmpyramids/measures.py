"""Probability measures on a fixed finite space: mixtures, total variation,
and the Prokhorov distance (subset scan and max-flow)."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ._flow import SCALE, bipartite_max_flow, quantize
from .core import METRIC_TOL, FiniteMmSpace, _as_a1
from .errors import InvalidParameter, ResourceLimit

SUBSET_ORACLE_MAX = 14


class MeasureOnSpace:
    """Mass vector on the points of a space; zeros are allowed."""

    def __init__(self, space: FiniteMmSpace, mass, validate: bool = True):
        m = np.array(mass, dtype=float).ravel()
        if m.shape != (space.n,):
            raise InvalidParameter("mass length does not match the space")
        if validate:
            if np.any(m < 0) or not np.all(np.isfinite(m)):
                raise InvalidParameter("mass must be nonnegative and finite")
            if abs(m.sum() - 1) > METRIC_TOL * max(1, len(m)):
                raise InvalidParameter(f"mass sums to {m.sum()!r}, not 1")
        m.setflags(write=False)
        self.space = space
        self.mass = m

    @classmethod
    def of(cls, space: FiniteMmSpace) -> "MeasureOnSpace":
        return cls(space, space.weight, validate=False)

    @classmethod
    def dirac(cls, space: FiniteMmSpace, i: int) -> "MeasureOnSpace":
        m = np.zeros(space.n)
        m[i] = 1.0
        return cls(space, m)

    def __repr__(self) -> str:
        return f"MeasureOnSpace({np.array2string(self.mass, precision=4)})"


def _same_space(mu: MeasureOnSpace, nu: MeasureOnSpace) -> None:
    if mu.space is not nu.space and not (
        mu.space.n == nu.space.n and np.array_equal(mu.space.dist, nu.space.dist)
    ):
        raise InvalidParameter("measures live on different spaces")


def convex_combination(a, measures: Sequence[MeasureOnSpace]) -> MeasureOnSpace:
    a = _as_a1(a)
    if len(a) != len(measures) or not measures:
        raise InvalidParameter("weights and measures must have equal nonzero length")
    for m in measures[1:]:
        _same_space(measures[0], m)
    mass = sum(ak * m.mass for ak, m in zip(a, measures))
    return MeasureOnSpace(measures[0].space, mass)


def total_variation(mu: MeasureOnSpace, nu: MeasureOnSpace) -> float:
    _same_space(mu, nu)
    return 0.5 * float(np.abs(mu.mass - nu.mass).sum())


def pushforward(mu: MeasureOnSpace, f: Sequence[int], target: FiniteMmSpace) -> MeasureOnSpace:
    f = np.asarray(f, dtype=int)
    if f.shape != (mu.space.n,):
        raise InvalidParameter("map must be defined on every point")
    if f.size and (f.min() < 0 or f.max() >= target.n):
        raise InvalidParameter("map image out of range")
    out = np.zeros(target.n)
    np.add.at(out, f, mu.mass)
    return MeasureOnSpace(target, out, validate=False)


# ------------------------------------------------------------- Prokhorov distance

def prokhorov_subset_oracle(mu: MeasureOnSpace, nu: MeasureOnSpace) -> float:
    """Prokhorov distance by scanning every subset A.

    For fixed A let 0 = d_0 < d_1 < ... be the values of d(., A) and m_k the
    mu-mass within d_k. The open-neighborhood condition holds for eps in
    (d_k, d_{k+1}] exactly when eps >= nu(A) - m_k, so the least admissible
    eps for A is min_k max(d_k, nu(A) - m_k); the distance is the max over A.
    """
    _same_space(mu, nu)
    d = mu.space.dist
    n = len(mu.mass)
    if n > SUBSET_ORACLE_MAX:
        raise ResourceLimit(f"subset oracle limited to {SUBSET_ORACLE_MAX} points", "n")
    best = 0.0
    masks = np.arange(1, 1 << n)
    members = ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
    nuA = members.astype(float) @ nu.mass
    for row, nA in zip(members, nuA):
        if nA <= best:
            continue
        dA = d[:, row].min(axis=1)
        levels = np.unique(dA)
        order = np.argsort(dA, kind="stable")
        cum = np.cumsum(mu.mass[order])
        # mass within each level: last cumulative index with dA <= level
        idx = np.searchsorted(dA[order], levels, side="right") - 1
        mk = cum[idx]
        val = float(np.min(np.maximum(levels, nA - mk)))
        best = max(best, val)
    return max(best, 0.0)


def _cross(mu: MeasureOnSpace, nu: MeasureOnSpace):
    su = np.flatnonzero(mu.mass > 0)
    sv = np.flatnonzero(nu.mass > 0)
    return su, sv, mu.space.dist[np.ix_(sv, su)]


def _flow_within(qv, qu, cross: np.ndarray, eps: float) -> int:
    return bipartite_max_flow(qv, qu, cross <= eps)


def prokhorov_at_most(mu: MeasureOnSpace, nu: MeasureOnSpace, eps: float) -> bool:
    """Whether d_P(mu, nu) <= eps: some coupling moves at most eps of mass
    farther than eps."""
    _same_space(mu, nu)
    if eps >= 1:
        return True
    su, sv, cross = _cross(mu, nu)
    qu, qv = quantize(mu.mass[su]), quantize(nu.mass[sv])
    flow = _flow_within(qv, qu, cross, eps)
    need = min(sum(qu), sum(qv)) - eps * SCALE
    return flow >= need - len(su) - len(sv)


def _prokhorov_cross(cross: np.ndarray, mass_v, mass_u) -> float:
    """Prokhorov distance given the distance block between the two supports.

    With F(t) the largest mass movable within distance t, the distance is
    min over breakpoints t of max(t, 1 - F(t)); breakpoints are 0 and the
    entries of ``cross``. F is monotone so a binary search finds the crossing.
    """
    qv, qu = quantize(mass_v), quantize(mass_u)
    total = min(sum(qu), sum(qv))
    levels = np.unique(np.concatenate([[0.0], cross[np.isfinite(cross)].ravel()]))
    cache: dict[int, float] = {}

    def deficit(k: int) -> float:
        if k not in cache:
            f = _flow_within(qv, qu, cross, levels[k])
            cache[k] = max(0.0, (total - f) / SCALE)
        return cache[k]

    lo, hi = 0, len(levels)
    while lo < hi:
        mid = (lo + hi) // 2
        if levels[mid] >= deficit(mid):
            hi = mid
        else:
            lo = mid + 1
    cands = [1.0]
    if lo < len(levels):
        cands.append(max(float(levels[lo]), deficit(lo)))
    if lo > 0:
        cands.append(max(float(levels[lo - 1]), deficit(lo - 1)))
    return min(cands)


def prokhorov_flow(mu: MeasureOnSpace, nu: MeasureOnSpace) -> float:
    """Prokhorov distance via max-flow feasibility over candidate radii."""
    _same_space(mu, nu)
    su, sv, cross = _cross(mu, nu)
    return _prokhorov_cross(cross, nu.mass[sv], mu.mass[su])


prokhorov = prokhorov_flow


def prokhorov_points(points_a: np.ndarray, mass_a, points_b: np.ndarray, mass_b,
                     p: float = math.inf) -> float:
    """Prokhorov distance between two atomic measures in R^N (l_p metric)."""
    pa = np.asarray(points_a, dtype=float).reshape(len(mass_a), -1)
    pb = np.asarray(points_b, dtype=float).reshape(len(mass_b), -1)
    if pa.shape[1] == 0:
        cross = np.zeros((len(pb), len(pa)))
    else:
        cross = np.linalg.norm(pb[:, None, :] - pa[None, :, :], ord=p, axis=2)
    return _prokhorov_cross(cross, mass_b, mass_a)


def product_measure(mu: MeasureOnSpace, nu: MeasureOnSpace, space: FiniteMmSpace) -> MeasureOnSpace:
    """mu x nu on a product space indexed i*|Y| + j."""
    return MeasureOnSpace(space, np.outer(mu.mass, nu.mass).ravel())
