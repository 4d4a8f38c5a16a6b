"""Seeded inequality sweeps and desk-scale experiments.

Every check is a function of (seed, instance index) only, so any row can be
recomputed with ``replay``. Each instance yields rows ``lhs <= rhs``; a row
fails when ``rhs - lhs < -SLACK_TOL``. Uncertified estimates (empirical rho)
go into ``trends`` and never decide pass/fail.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np
from scipy.sparse.csgraph import shortest_path
from scipy.stats import spearmanr

from .core import (
    INF,
    ExtendedFiniteMmSpace,
    FiniteMmSpace,
    PointedSpace,
    WeightVector,
    atoms_generator,
    cycle_space,
    direct_sum,
    dissipation_space,
    gapped_sum,
    l1_distance,
    lipschitz_dominates,
    lp_power,
    mm_isomorphic,
    one_point,
    restrict_normalize,
    scale,
    two_point,
    wedge_sum,
)
from .distances import box_distance_exact, find_mm_iso
from .errors import InvalidParameter, ResourceLimit
from .invariants import covering_number, obs_diameter, partial_diameter, separation_distance
from .measures import MeasureOnSpace, convex_combination, prokhorov_flow, prokhorov_points, total_variation
from .pyramids import (
    PyramidApprox,
    atoms_limit_of_scaling,
    cov_of_pyramid,
    decompose_extended,
    direct_sum_pyramids,
    rho_empirical,
)

SLACK_TOL = 1e-9


@dataclass
class Row:
    check: str
    instance: str
    lhs: float
    rhs: float
    runtime_ms: float = 0.0
    data: dict | None = None
    eq: bool = False  # equality row: slack is minus the absolute gap

    @property
    def slack(self) -> float:
        if self.eq:
            return 0.0 - abs(self.rhs - self.lhs)
        return self.rhs - self.lhs

    @property
    def ok(self) -> bool:
        return self.slack >= -SLACK_TOL


@dataclass
class CheckReport:
    name: str
    seed: int
    count: int
    rows: list[Row]
    params: dict = field(default_factory=dict)
    trends: list[dict] = field(default_factory=list)
    runtime_s: float = 0.0

    @property
    def failures(self) -> list[dict]:
        out = []
        for r in self.rows:
            if not r.ok:
                out.append({
                    "suite": self.name, "seed": self.seed, "params": self.params,
                    "index": int(r.instance.rsplit("#", 1)[-1]), "check": r.check,
                    "instance": r.instance, "lhs": r.lhs, "rhs": r.rhs, "data": r.data,
                })
        return out

    @property
    def passed(self) -> bool:
        return not self.failures

    def min_slack(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for r in self.rows:
            out[r.check] = min(out.get(r.check, math.inf), r.slack)
        return out

    def instances(self, check: str | None = None) -> int:
        return sum(1 for r in self.rows if check is None or r.check == check)

    def summary(self) -> str:
        lines = [f"{self.name}: {'PASS' if self.passed else 'FAIL'} "
                 f"({len(self.rows)} rows, {len(self.failures)} failures, seed {self.seed})"]
        for name, s in self.min_slack().items():
            lines.append(f"  {name}: n={self.instances(name)} min slack {s:.3g}")
        groups: dict[str, list[dict]] = {}
        for t in self.trends:
            groups.setdefault(t["name"], []).append(t)
        for name, ts in groups.items():
            vals = ", ".join(f"{t['value']:.6g}" for t in ts[:6]) + (", ..." if len(ts) > 6 else "")
            lines.append(f"  trend {name}: {vals} {ts[0].get('cert', 'ESTIMATE')}")
        return "\n".join(lines)

    def to_csv(self, path=None, timings: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "seed", "instance-id", "lhs", "rhs", "slack", "runtime-ms"])
        for r in self.rows:
            w.writerow([r.check, self.seed, r.instance, repr(float(r.lhs)), repr(float(r.rhs)),
                        repr(float(r.slack)), f"{r.runtime_ms:.3f}" if timings else ""])
        for t in self.trends:
            w.writerow([f"trend:{t['name']}", self.seed, t["instance"], repr(float(t["value"])),
                        "", "", ""])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def failures_json(self) -> str:
        return json.dumps(self.failures, indent=1, default=_jsonable)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(type(o))


def _space_data(X: FiniteMmSpace) -> dict:
    return {"dist": [[v if math.isfinite(v) else "inf" for v in row] for row in X.dist.tolist()],
            "weights": np.asarray(X.weight).tolist()}


# ------------------------------------------------------------ random instances

def instance_rng(seed: int, index: int, salt: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed, index, salt])


def random_weights(rng: np.random.Generator, n: int, prune: float = 1e-3) -> np.ndarray:
    w = rng.dirichlet(np.ones(n))
    w[w < prune] = 0.0
    if not w.any():
        w[rng.integers(n)] = 1.0
    return w / w.sum()


def random_space(rng: np.random.Generator, n_max: int = 6, n_min: int = 2,
                 scale_range: tuple[float, float] = (0.2, 3.0), perturb: float = 0.5) -> FiniteMmSpace:
    """Points in a random-dimension l_inf cube, optionally perturbed and
    repaired by shortest-path closure; Dirichlet weights with near-zeros dropped."""
    n = int(rng.integers(n_min, n_max + 1))
    dim = int(rng.integers(1, 4))
    pts = rng.uniform(0, 1, size=(n, dim))
    d = np.abs(pts[:, None, :] - pts[None, :, :]).max(axis=2) * rng.uniform(*scale_range)
    if rng.random() < perturb:
        f = rng.uniform(1.0, 1.3, size=(n, n))
        d = shortest_path(d * np.triu(f, 1) + (d * np.triu(f, 1)).T, directed=False)
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    w = random_weights(rng, n)
    keep = np.flatnonzero(w > 0)
    return FiniteMmSpace(d[np.ix_(keep, keep)], w[keep])


def random_measure(rng: np.random.Generator, X: FiniteMmSpace, sparsity: float = 0.3) -> MeasureOnSpace:
    keep = rng.random(X.n) >= sparsity
    if not keep.any():
        keep[rng.integers(X.n)] = True
    m = np.zeros(X.n)
    m[keep] = rng.dirichlet(np.ones(keep.sum()))
    return MeasureOnSpace(X, m / m.sum())


def random_lipschitz_map(d: np.ndarray, N: int, R: float, rng: np.random.Generator) -> np.ndarray:
    """1-Lipschitz map into the l_inf cube of radius R in R^N: each coordinate
    is a clipped min of shifted distance functions."""
    n = len(d)
    F = np.empty((n, N))
    for i in range(N):
        k = int(rng.integers(1, n + 1))
        S = rng.choice(n, size=k, replace=False)
        g = rng.uniform(-R, R, size=k)
        F[:, i] = np.min(g[None, :] + d[:, S], axis=1)
    return np.clip(F, -R, R)


def _is_lipschitz(F: np.ndarray, d: np.ndarray) -> bool:
    spread = np.abs(F[:, None, :] - F[None, :, :]).max(axis=2)
    return bool(np.all(spread <= d + 1e-12 * max(1.0, float(np.max(d[np.isfinite(d)], initial=0)))))


def image_space(F: np.ndarray, w: np.ndarray) -> tuple[FiniteMmSpace, np.ndarray]:
    """The pushforward space of w under F with the l_inf metric, and the map."""
    pts, inv = np.unique(F, axis=0, return_inverse=True)
    inv = inv.ravel()
    mass = np.zeros(len(pts))
    np.add.at(mass, inv, w)
    d = np.abs(pts[:, None, :] - pts[None, :, :]).max(axis=2)
    return FiniteMmSpace(d, mass), inv


def _timed(fn: Callable, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, 1000 * (time.perf_counter() - t0)


def _run(name: str, seed: int, count: int, one: Callable[[int, int], list[Row]],
         workers: int = 1, params: dict | None = None) -> CheckReport:
    t0 = time.perf_counter()
    idx = range(count)
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            chunks = list(ex.map(partial(one, seed), idx))
    else:
        chunks = [one(seed, i) for i in idx]
    rows = [r for chunk in chunks for r in chunk if isinstance(r, Row)]
    trends = [r for chunk in chunks for r in chunk if isinstance(r, dict)]
    return CheckReport(name, seed, count, rows, params or {}, trends, time.perf_counter() - t0)


# ------------------------------------------------------------ metric lemmas

def _metric_instance(seed: int, i: int) -> list:
    rng = instance_rng(seed, i)
    tag = f"#{i}"
    rows: list = []

    # Prokhorov vs total variation on a shared space
    X = random_space(rng, n_max=8)
    mu, nu = random_measure(rng, X), random_measure(rng, X)
    dp, ms = _timed(prokhorov_flow, mu, nu)
    rows.append(Row("dP<=dTV", "dP<=dTV" + tag, dp, total_variation(mu, nu), ms,
                    {"space": _space_data(X), "mu": mu.mass.tolist(), "nu": nu.mass.tolist()}))

    # box of two measures on one metric vs twice their Prokhorov distance
    X = random_space(rng, n_max=4)
    mu, nu = random_measure(rng, X), random_measure(rng, X)
    Xm = FiniteMmSpace(X.dist, mu.mass)
    Xn = FiniteMmSpace(X.dist, nu.mass)
    b, ms = _timed(box_distance_exact, Xm, Xn)
    rows.append(Row("box<=2dP", "box<=2dP" + tag, b, 2 * prokhorov_flow(mu, nu), ms,
                    {"space": _space_data(X), "mu": mu.mass.tolist(), "nu": nu.mass.tolist()}))

    # eps-mm-isomorphism certificates in both directions of the box comparison
    X = random_space(rng, n_max=3, n_min=1)
    Y = random_space(rng, n_max=3, n_min=1)
    data = {"X": _space_data(X), "Y": _space_data(Y)}
    b = box_distance_exact(X, Y)
    t0 = time.perf_counter()
    cert = None
    for eps in (0.02, 0.05, 0.1, 0.2, 0.35, 0.5, 1.0):
        cert = find_mm_iso(X, Y, eps)
        if cert is not None:
            break
    ms = 1000 * (time.perf_counter() - t0)
    if cert is not None:
        rows.append(Row("box<=3eps", "box<=3eps" + tag, b, 3 * cert.eps, ms,
                        dict(data, map=list(cert.map), eps=cert.eps)))
    eps = b + 1e-3
    found, ms = _timed(find_mm_iso, X, Y, 3 * eps)
    rows.append(Row("box<eps=>3eps-iso", "box<eps=>3eps-iso" + tag, 0.0 if found else 1.0, 0.0, ms,
                    dict(data, eps=eps)))

    rows.extend(_restriction_rows(rng, tag))

    if i < 3:
        P, Q = PyramidApprox.of_space(X), PyramidApprox.of_space(Y)
        rows.append({"name": "rho_empirical_vs_box", "instance": f"rho{tag}",
                     "value": float(rho_empirical(P, Q, N_max=1, budget=8, seed=seed).value),
                     "cert": "ESTIMATE", "box": b})
    return rows


def _restriction_rows(rng: np.random.Generator, tag: str) -> list[Row]:
    X = random_space(rng, n_max=4)
    k = int(rng.integers(1, X.n + 1))
    A = sorted(rng.choice(X.n, size=k, replace=False).tolist())
    mass = float(np.asarray(X.weight)[A].sum())
    b, ms = _timed(box_distance_exact, restrict_normalize(X, A), X)
    return [Row("box(A,X)<=4(1-mu(A))", "restriction" + tag, b, 4 * (1 - mass), ms,
                {"space": _space_data(X), "A": A})]


def _metric_corpus() -> list[Row]:
    rows = []
    for j, length in enumerate((0.3, 1.0, 2.0)):
        X = two_point(length)
        dx, dy = MeasureOnSpace.dirac(X, 0), MeasureOnSpace.dirac(X, 1)
        dp = prokhorov_flow(dx, dy)
        rows.append(Row("dP<=dTV", f"dirac-corpus#{j}", dp, total_variation(dx, dy)))
        rows.append(Row("box<=2dP", f"dirac-corpus#{j}",
                        box_distance_exact(one_point(), one_point()), 2 * dp))
    return rows


def check_metric_lemmas(seed: int = 0, count: int = 200, workers: int = 1) -> CheckReport:
    rep = _run("metric-lemmas", seed, count, _metric_instance, workers)
    rep.rows = _metric_corpus() + rep.rows
    return rep


# ------------------------------------------------------------ sum bounds

def _tails(a: Sequence[float], b: Sequence[float], M: int) -> float:
    return math.fsum(a[M:]) + math.fsum(b[M:])


def _mix_points(parts: Sequence[tuple[np.ndarray, np.ndarray]], a: Sequence[float]):
    pts = np.concatenate([p for p, _ in parts], axis=0)
    mass = np.concatenate([ak * m for (_, m), ak in zip(parts, a)])
    return pts, mass


def _dirac0(N: int):
    return np.zeros((1, N)), np.ones(1)


def _sum_instance(seed: int, i: int) -> list:
    rng = instance_rng(seed, i)
    tag = f"#{i}"
    rows: list = []

    # convex combinations on one space
    X = random_space(rng, n_max=7)
    N, Np = int(rng.integers(1, 5)), int(rng.integers(1, 5))
    a = rng.dirichlet(np.ones(N))
    b = rng.dirichlet(np.ones(Np))
    mus = [random_measure(rng, X) for _ in range(N)]
    nus = [random_measure(rng, X) for _ in range(Np)]
    data = {"space": _space_data(X), "a": a.tolist(), "b": b.tolist()}
    M = min(N, Np)
    same = [random_measure(rng, X) for _ in range(N)]
    lhs = prokhorov_flow(convex_combination(a, mus), convex_combination(a, same))
    rhs = max(prokhorov_flow(m, s) for m, s in zip(mus, same))
    rows.append(Row("mix-same-weights", "mix-same" + tag, lhs, rhs, 0.0, data))
    t = float(rng.uniform(0.05, 0.95))
    lhs = prokhorov_flow(convex_combination([t, 1 - t], mus[:1] + nus[:1]),
                         convex_combination([t, 1 - t], same[:1] + [nus[-1]]))
    rhs = prokhorov_flow(mus[0], same[0]) + 1 - t
    rows.append(Row("mix-two-weights", "mix-two" + tag, lhs, rhs, 0.0, dict(data, t=t)))
    mix_a, mix_b = convex_combination(a, mus), convex_combination(b, nus)
    whole = prokhorov_flow(mix_a, mix_b)
    for m in range(1, M + 1):
        rhs = (max(prokhorov_flow(mus[n], nus[n]) for n in range(m))
               + l1_distance(a, b) + _tails(a, b, m))
        rows.append(Row("mix-general", f"mix-general-M{m}" + tag, whole, rhs, 0.0, dict(data, M=m)))
    if N == Np:
        rows.append(Row("tails-vanish-at-M=N", "tails" + tag, _tails(a, b, N), 0.0))

    # gapped sum against a direct sum of space pyramids, through proof witnesses
    k = int(rng.integers(1, 3))
    r = float(2 * k + rng.uniform(0, 3))
    parts = [random_space(rng, n_max=3, n_min=1, scale_range=(0.2, 2.0)) for _ in range(N)]
    others = [random_space(rng, n_max=3, n_min=1, scale_range=(0.2, 2.0)) for _ in range(Np)]
    bases = [int(rng.integers(P.n)) for P in parts]
    Z = gapped_sum([PointedSpace(P, s) for P, s in zip(parts, bases)], a, r)
    offs = np.cumsum([0] + [P.n for P in parts])
    data = {"parts": [_space_data(P) for P in parts], "others": [_space_data(Q) for Q in others],
            "a": a.tolist(), "b": b.tolist(), "r": r, "k": k}
    # forward: F on Z restricts to the parts; partner measures come from
    # 1-Lipschitz maps on the other side, Dirac at 0 past M
    F = random_lipschitz_map(Z.dist, k, k, rng)
    mu_n = [(F[offs[n]:offs[n + 1]], np.asarray(parts[n].weight)) for n in range(N)]
    nu_n = [(random_lipschitz_map(Q.dist, k, k, rng), np.asarray(Q.weight)) for Q in others]
    for m in range(1, M + 1):
        nu_use = nu_n[:m] + [_dirac0(k)] * (Np - m)
        lhs = prokhorov_points(*_mix_points(mu_n, a), *_mix_points(nu_use, b))
        rhs = (max(prokhorov_points(*mu_n[n], *nu_n[n]) for n in range(m))
               + l1_distance(a, b) + _tails(a, b, m))
        rows.append(Row("sum-measurement-forward", f"forward-M{m}" + tag, lhs, rhs, 0.0, dict(data, M=m)))
    # reverse: glue part maps, zero past M; the glued map stays 1-Lipschitz since 2k <= r
    fn = [(random_lipschitz_map(Q.dist, k, k, rng), np.asarray(Q.weight)) for Q in others]
    Phi_n = [random_lipschitz_map(P.dist, k, k, rng) for P in parts]
    for m in range(1, M + 1):
        Phi = np.zeros((Z.n, k))
        for n in range(m):
            Phi[offs[n]:offs[n + 1]] = Phi_n[n]
        rows.append(Row("glued-map-lipschitz", f"glued-M{m}" + tag,
                        0.0 if _is_lipschitz(Phi, Z.dist) else 1.0, 0.0, 0.0, dict(data, M=m)))
        lhs = prokhorov_points(Phi, np.asarray(Z.weight), *_mix_points(fn, b))
        rhs = (max(prokhorov_points(Phi_n[n], np.asarray(parts[n].weight), *fn[n]) for n in range(m))
               + l1_distance(a, b) + _tails(a, b, m))
        rows.append(Row("sum-measurement-reverse", f"reverse-M{m}" + tag, lhs, rhs, 0.0, dict(data, M=m)))

    # atoms against atoms: pair atoms by sorted index
    A = np.sort(rng.dirichlet(np.ones(N)))[::-1]
    B = np.sort(rng.dirichlet(np.ones(Np)))[::-1]
    pts = rng.uniform(-k, k, size=(max(N, Np), k))
    lhs = prokhorov_points(pts[:N], A, pts[:Np], B)
    rows.append(Row("atoms-witness<=l1", "atoms" + tag, lhs, l1_distance(A, B), 0.0,
                    {"A": A.tolist(), "B": B.tolist()}))
    return rows


GAP_CORPUS = (0.01, 0.1, 0.5, 1.0, 1.9, 2.0, 3.0, 4.0, 5.5, 8.0, 16.0, 40.0)


def _gap_tail_rows() -> list[Row]:
    rows = []
    prev = math.inf
    for j, r in enumerate(GAP_CORPUS):
        m = math.floor(r / 2)
        tail = math.fsum(2.0 ** -kk / (2 * kk) for kk in range(m + 1, m + 200))
        bound = 2.0 ** (-r / 2)
        rows.append(Row("gap-tail<=2^(-r/2)", f"gap-tail#{j}", tail, bound, 0.0, {"r": r}))
        # the bound only grows as r shrinks
        rows.append(Row("gap-term-monotone", f"gap-monotone#{j}", bound, prev, 0.0, {"r": r}))
        prev = bound
    return rows


def check_sum_bounds(seed: int = 0, count: int = 200, workers: int = 1) -> CheckReport:
    rep = _run("sum-bounds", seed, count, _sum_instance, workers)
    rep.rows = _gap_tail_rows() + rep.rows
    return rep


# ------------------------------------------------------------ invariant lemmas

SCALES = (0.5, 2.0, 10.0)


def _dominated_pair(rng: np.random.Generator):
    """(Y, X) where X is the l_inf image of Y under a random 1-Lipschitz map."""
    Y = random_space(rng, n_max=7)
    F = random_lipschitz_map(Y.dist, int(rng.integers(1, 3)), Y.diameter() + 1.0, rng)
    X, f = image_space(F, np.asarray(Y.weight))
    return Y, X, f


def _invariant_instance(seed: int, i: int) -> list:
    rng = instance_rng(seed, i)
    tag = f"#{i}"
    rows: list = []

    # scaling covariance, bit for bit
    X = random_space(rng, n_max=7)
    kappa = float(rng.uniform(0.05, 0.95))
    kap2 = sorted(rng.uniform(0.05, 0.45, size=2).tolist())
    od = obs_diameter(X, kappa, seed=seed)
    sep = separation_distance(X, kap2)
    pd = partial_diameter(MeasureOnSpace.of(X), 1 - kappa)
    data = {"space": _space_data(X), "kappa": kappa, "kappas": kap2}
    for t in SCALES:
        Xt = scale(X, t)
        odt = obs_diameter(Xt, kappa, seed=seed)
        diffs = [abs(odt.lower - t * od.lower), abs(odt.upper - t * od.upper),
                 abs(separation_distance(Xt, kap2) - t * sep),
                 abs(partial_diameter(MeasureOnSpace.of(Xt), 1 - kappa) - t * pd)]
        rows.append(Row("scaling-bitwise", f"scale{t:g}" + tag, float(max(diffs) > 0), 0.0, 0.0,
                        dict(data, t=t)))

    # covering numbers along the Lipschitz order
    Y, Xi, f = _dominated_pair(rng)
    dec, ms = _timed(lipschitz_dominates, Y, Xi)
    pdata = {"Y": _space_data(Y), "X": _space_data(Xi), "map": f.tolist()}
    rows.append(Row("domination-verified", "dominated" + tag, 0.0 if dec else 1.0, 0.0, ms, pdata))
    if dec:
        for j in range(5):
            r = float(rng.uniform(0.0, 1.2) * max(Y.diameter(), 1e-9))
            kap = float(rng.uniform(0.01, 0.99))
            cx, ms = _timed(covering_number, Xi, r, kap)
            cy = covering_number(Y, r, kap)
            rows.append(Row("cov-monotone", f"cov{j}" + tag, cx, cy, ms, dict(pdata, r=r, kappa=kap)))

    rows.extend(_restriction_rows(rng, tag))

    # separation sandwiched by observable diameters
    X = random_space(rng, n_max=7)
    k = float(rng.uniform(0.05, 0.45))
    s = separation_distance(X, [k, k])
    data = {"space": _space_data(X), "kappa": k}
    rows.append(Row("obsdiam(2k)<=sep(k,k)", "sandwich-low" + tag,
                    obs_diameter(X, min(2 * k, 0.95), seed=seed).lower, s, 0.0, data))
    rows.append(Row("sep(k,k)<=obsdiam(k/2)", "sandwich-high" + tag,
                    s, obs_diameter(X, k / 2, seed=seed).lower, 0.0, data))
    return rows


def check_invariant_lemmas(seed: int = 0, count: int = 100, workers: int = 1) -> CheckReport:
    return _run("invariant-lemmas", seed, count, _invariant_instance, workers)


# ------------------------------------------------------------ experiments

def _monotone_row(name: str, values: Sequence[float], increasing: bool, instance: str) -> list:
    """A pass/fail row for strict monotonicity and a Spearman trend record."""
    v = list(values)
    ok = all((b > a) if increasing else (b < a) for a, b in zip(v, v[1:]))
    out: list = [Row(name, instance, 0.0 if ok else 1.0, 0.0, 0.0, {"values": v})]
    if len(v) >= 2 and len(set(v)) > 1:
        rho = float(spearmanr(range(len(v)), v).statistic)
        out.append({"name": f"spearman:{name}", "instance": instance, "value": rho, "cert": "EXACT"})
    return out


def experiment_dissipation(n_list: Sequence[int] = (4, 8, 16)) -> CheckReport:
    t0 = time.perf_counter()
    rows: list = []
    for j, n in enumerate(n_list):
        D = dissipation_space(n)
        tag = f"n={n}#{j}"
        s, ms = _timed(separation_distance, D, [0.25, 0.25])
        rows.append(Row("sep=n", tag, s, float(n), ms, eq=True))
        c, ms = _timed(covering_number, D, 0.5, 0.25)
        rows.append(Row("cov=ceil(3n/4)", tag, float(c), float(math.ceil(3 * n / 4)), ms, eq=True))
        w = np.asarray(D.weight)
        rows.append(Row("criterion-(i)-cover", tag, math.fsum(w), 1.0, eq=True))
        off = D.dist[~np.eye(n, dtype=bool)]
        rows.append({"name": "min-separation", "instance": tag, "cert": "EXACT",
                     "value": float(off.min()) if n > 1 else INF})
        rows.append({"name": "max-part-mass", "instance": tag, "value": float(w.max()), "cert": "EXACT"})
    seps = [float(dissipation_space(n).dist[0, 1]) for n in n_list if n > 1]
    rows += _monotone_row("criterion-(ii)-separation-grows", seps, True, "trend#0")
    rows += _monotone_row("criterion-(iii)-mass-shrinks", [1.0 / n for n in n_list], False, "trend#1")
    P = PyramidApprox.from_generators([dissipation_space(n) for n in n_list])
    trend = cov_of_pyramid(P, 0.5, 0.25)
    rows.append(Row("cov-divergence-detected", "trend#2", 0.0 if trend.diverging else 1.0, 0.0, 0.0,
                    {"per_generator": list(trend.per_generator)}))
    return CheckReport("dissipation", 0, len(n_list), [r for r in rows if isinstance(r, Row)],
                       {"n_list": list(n_list)}, [r for r in rows if isinstance(r, dict)],
                       time.perf_counter() - t0)


def sup_open_ball_mass(X: FiniteMmSpace, r: float) -> float:
    """max over x of the mass of {y : d(x, y) < r}, by enumeration."""
    return float(((X.dist < r).astype(float) @ np.asarray(X.weight)).max())


def experiment_product_ball_decay(base: FiniteMmSpace | None = None, p: float = 2.0, r: float = 0.4,
                                  n_list: Sequence[int] = (1, 2, 4), max_points: int = 4096) -> CheckReport:
    t0 = time.perf_counter()
    base = two_point(1.0) if base is None else base
    if not r < base.diameter() / 2:
        raise InvalidParameter("need r < diam(base)/2")
    if base.n ** max(n_list) > max_points:
        raise ResourceLimit(f"|X|^n = {base.n ** max(n_list)} exceeds max_points={max_points}", "max_points")
    n0 = 1
    while lp_power(base, p, n0, max_points).diameter() <= 2 * r:
        n0 += 1
    m0 = sup_open_ball_mass(lp_power(base, p, n0, max_points), r)
    rows: list = [Row("sup-ball-mass<1", "premise#0", m0, math.nextafter(1.0, 0.0), 0.0, {"n0": n0})]
    masses = []
    for j, n in enumerate(n_list):
        m, ms = _timed(sup_open_ball_mass, lp_power(base, p, n, max_points), r)
        masses.append(m)
        bound = m0 ** (n // n0)
        rows.append(Row("mass<=mass(n0)^floor(n/n0)", f"n={n}#{j}", m, bound, ms,
                        {"n": n, "n0": n0, "p": p, "r": r}))
        rows.append({"name": "sup-ball-mass", "instance": f"n={n}#{j}", "value": m, "cert": "EXACT"})
    for j, (a, b) in enumerate(zip(masses, masses[1:])):
        rows.append(Row("mass-nonincreasing", f"step#{j}", b, a))
    return CheckReport("ball-decay", 0, len(n_list), [r_ for r_ in rows if isinstance(r_, Row)],
                       {"p": p, "r": r, "n_list": list(n_list), "base": _space_data(base)},
                       [r_ for r_ in rows if isinstance(r_, dict)], time.perf_counter() - t0)


def _wedge_numbers(C1: FiniteMmSpace, C2: FiniteMmSpace, alpha: float, sigma: float, n: int):
    """Masses of the far parts of each copy and their separation."""
    W = wedge_sum(PointedSpace(C1, 0), PointedSpace(C2, 0), alpha)
    radial = C1.dist[0]
    r_n = float(radial[radial >= sigma * math.sqrt(n)].min())
    w = np.asarray(W.weight)
    n1 = C1.n
    in_a = np.zeros(W.n, dtype=bool)
    in_a[:n1] = W.dist[0, :n1] >= r_n
    in_b = np.zeros(W.n, dtype=bool)
    in_b[n1:] = W.dist[0, n1:] >= r_n
    sep = float(W.dist[np.ix_(in_a, in_b)].min())
    ball = float(w[W.dist[0] < r_n].sum())
    return W, r_n, float(w[in_a].sum()), float(w[in_b].sum()), sep, ball


def experiment_wedge_convergence(m: int = 6, n_list: Sequence[int] = (1, 2), alpha: float = 0.5,
                                 seed: int = 0, sigma: float = 1.0, rho_budget: int = 0,
                                 max_points: int = 4096) -> CheckReport:
    """Wedge of two copies of the l2 power of an m-cycle, glued at point 0.

    A_n and B_n are the points of each copy at distance >= r_n from the
    glued point, r_n the least such distance >= sigma sqrt(n)."""
    t0 = time.perf_counter()
    if not 0 < alpha < 1:
        raise InvalidParameter("alpha must lie in (0, 1)")
    C = cycle_space(m)
    rows: list = []
    masses_a, masses_b, seps = [], [], []
    for j, n in enumerate(n_list):
        if 2 * m ** n > max_points:
            raise ResourceLimit(f"2 m^n = {2 * m ** n} exceeds max_points={max_points}", "max_points")
        C1 = lp_power(C, 2, n, max_points)
        C2 = lp_power(C, 2, n, max_points)
        tag = f"n={n}#{j}"
        W, r_n, ma, mb, sep, ball = _wedge_numbers(C1, C2, alpha, sigma, n)
        masses_a.append(ma)
        masses_b.append(mb)
        seps.append(sep)
        rows.append(Row("separation=2r_n", tag, sep, 2 * r_n, eq=True))
        rows.append(Row("mass(A_n)<=alpha", tag, ma, alpha))
        rows.append(Row("mass(B_n)<=1-alpha", tag, mb, 1 - alpha))
        rows.append(Row("alpha-mass(A_n)<=ball", tag, alpha - ma, ball))
        rows.append(Row("1-alpha-mass(B_n)<=ball", tag, 1 - alpha - mb, ball))
        _, r2, mb2, ma2, sep2, _ = _wedge_numbers(C2, C1, 1 - alpha, sigma, n)
        same = (ma2, mb2, sep2, r2) == (ma, mb, sep, r_n)
        if alpha == 0.5:
            same = same and ma == mb
        rows.append(Row("swap-symmetry", tag, 0.0 if same else 1.0, 0.0))
        for name, v in (("mass(A_n)", ma), ("mass(B_n)", mb), ("separation", sep), ("r_n", r_n)):
            rows.append({"name": name, "instance": tag, "value": v, "cert": "EXACT"})
        if rho_budget > 0:
            S = direct_sum_pyramids([PyramidApprox.of_space(C1), PyramidApprox.of_space(C2)],
                                    [alpha, 1 - alpha], gaps=[2 * r_n])
            est = rho_empirical(PyramidApprox.of_space(W), S, N_max=1, budget=rho_budget, seed=seed)
            rows.append({"name": "rho_empirical(wedge,gapped-sum)", "instance": tag,
                         "value": float(est.value), "cert": "ESTIMATE"})
    rows += _monotone_row("mass(A_n)-increasing", masses_a, True, "trend#0")
    rows += _monotone_row("mass(B_n)-increasing", masses_b, True, "trend#1")
    rows += _monotone_row("separation-increasing", seps, True, "trend#2")
    return CheckReport("wedge", seed, len(n_list), [r for r in rows if isinstance(r, Row)],
                       {"m": m, "n_list": list(n_list), "alpha": alpha, "sigma": sigma},
                       [r for r in rows if isinstance(r, dict)], time.perf_counter() - t0)


# ------------------------------------------------------------ decomposition

FIXED_ATOMS = ((0.5, 0.3, 0.2), (1.0,))


def atom_representative(B, gap: float = 4.0) -> ExtendedFiniteMmSpace:
    """The extended space of atoms B: the atoms generator with its gaps sent to infinity."""
    X = atoms_generator(WeightVector.atoms(B), max(1, math.ceil(gap)))
    d = np.where(X.dist >= gap, INF, X.dist)
    return ExtendedFiniteMmSpace(d, X.weight)


def merged_atoms(a: Sequence[float], Bs: Sequence[Sequence[float]]) -> tuple[float, ...]:
    """The nonincreasing rearrangement of all products a_n b_nk."""
    return tuple(sorted((an * x for an, B in zip(a, Bs) for x in B), reverse=True))


def _shuffled(Z: FiniteMmSpace, rng: np.random.Generator) -> FiniteMmSpace:
    perm = rng.permutation(Z.n)
    return type(Z)(Z.dist[np.ix_(perm, perm)], np.asarray(Z.weight)[perm],
                   [("relabel", int(k)) for k in range(Z.n)])


def _decomposition_instance(seed: int, i: int) -> list:
    rng = instance_rng(seed, i)
    tag = f"#{i}"
    rows: list = []

    # weights recovered from the scaling limit of gapped generators
    A = FIXED_ATOMS[i] if i < len(FIXED_ATOMS) else tuple(rng.dirichlet(np.ones(int(rng.integers(1, 5)))))
    parts = [random_space(rng, n_max=4, n_min=1, scale_range=(0.1, 1.0)) for _ in A]
    P = direct_sum_pyramids([PyramidApprox.of_space(X) for X in parts], A, gaps=(8, 16))
    rec, ms = _timed(atoms_limit_of_scaling, P)
    truth = tuple(sorted(A, reverse=True))
    rows.append(Row("atoms-recovery-l1", "atoms" + tag, l1_distance(rec.value.entries, truth), 1e-6, ms,
                    {"A": list(A), "recovered": list(rec.value.entries),
                     "parts": [_space_data(X) for X in parts]}))
    rows.append({"name": "recovered-atoms-l1-error", "instance": "atoms" + tag, "cert": "ESTIMATE",
                 "value": l1_distance(rec.value.entries, truth), "recovered": list(rec.value.entries)})

    # decomposition round trip, and rebuilds from permuted relabeled parts
    k = int(rng.integers(1, 6))
    parts = [random_space(rng, n_max=6, n_min=1) for _ in range(k)]
    a = rng.dirichlet(np.ones(k))
    Z = direct_sum(parts, a)
    D, ms = _timed(decompose_extended, Z)
    data = {"parts": [_space_data(X) for X in parts], "a": a.tolist()}
    rows.append(Row("decompose-round-trip", "round-trip" + tag,
                    0.0 if _matches(D, parts, a) else 1.0, 0.0, ms, data))
    order = rng.permutation(k)
    Z2 = _shuffled(direct_sum([_shuffled(parts[j], rng) for j in order], a[order]), rng)
    D2 = decompose_extended(Z2)
    same = D2.keys == D.keys and l1_distance(D2.weights.entries, D.weights.entries) <= 1e-12
    rows.append(Row("decompose-canonical", "canonical" + tag, 0.0 if same else 1.0, 0.0, 0.0,
                    dict(data, order=order.tolist())))

    # merging atoms of atoms pyramids
    N = int(rng.integers(1, 4))
    a = np.sort(rng.dirichlet(np.ones(N)))[::-1]
    Bs = [tuple(np.sort(rng.dirichlet(np.ones(int(rng.integers(1, 4)))))[::-1]) for _ in range(N)]
    lhs = direct_sum([atom_representative(B) for B in Bs], a)
    rhs = atom_representative(merged_atoms(a, Bs))
    iso = mm_isomorphic(lhs, rhs)
    rows.append(Row("atoms-merge-identity", "merge" + tag, 0.0 if iso else 1.0, 0.0, 0.0,
                    {"a": a.tolist(), "B": [list(B) for B in Bs]}))

    # the merged vector equals a exactly when every B_n is (1)
    if i % 2 == 0:
        Bs = [(1.0,)] * N
    eq = l1_distance(merged_atoms(a, Bs), tuple(a)) <= 1e-12
    all_one = all(len(B) == 1 for B in Bs)
    rows.append(Row("merge-equals-a-iff-trivial", "merge-iff" + tag, 0.0 if eq == all_one else 1.0, 0.0,
                    0.0, {"a": a.tolist(), "B": [list(B) for B in Bs]}))
    return rows


def _matches(D, parts, a) -> bool:
    if len(D.parts) != len(parts):
        return False
    used = [False] * len(parts)
    for w, X in zip(D.weights, D.parts):
        for j, (b, Y) in enumerate(zip(a, parts)):
            if not used[j] and abs(w - b) <= 1e-9 and mm_isomorphic(X, Y):
                used[j] = True
                break
        else:
            return False
    return True


def _merge_negative_rows() -> list[Row]:
    merged = merged_atoms((0.5, 0.5), [(0.5, 0.5), (1.0,)])
    differs = l1_distance(merged, (0.5, 0.5)) > 1e-12
    return [Row("merge-negative-case", "negative#0", 0.0 if differs else 1.0, 0.0, 0.0,
                {"merged": list(merged)})]


def experiment_decomposition(seed: int = 0, count: int = 200, workers: int = 1) -> CheckReport:
    rep = _run("decomposition", seed, count, _decomposition_instance, workers)
    rep.rows = _merge_negative_rows() + rep.rows
    return rep


# ------------------------------------------------------------ registry and replay

SUITES: dict[str, Callable[..., CheckReport]] = {
    "metric-lemmas": check_metric_lemmas,
    "sum-bounds": check_sum_bounds,
    "invariant-lemmas": check_invariant_lemmas,
    "decomposition": experiment_decomposition,
}

EXPERIMENTS: dict[str, Callable[..., CheckReport]] = {
    "dissipation": experiment_dissipation,
    "ball-decay": experiment_product_ball_decay,
    "wedge": experiment_wedge_convergence,
    "decomposition": experiment_decomposition,
}

_INSTANCE_FNS = {
    "metric-lemmas": _metric_instance,
    "sum-bounds": _sum_instance,
    "invariant-lemmas": _invariant_instance,
    "decomposition": _decomposition_instance,
}


def run_all(seed: int = 0, count: int | None = None, workers: int = 1) -> list[CheckReport]:
    """Every suite in fixed order, then the parameter-free experiments."""
    out = []
    for name, fn in SUITES.items():
        out.append(fn(seed, count, workers) if count is not None else fn(seed, workers=workers))
    out.append(experiment_dissipation())
    out.append(experiment_product_ball_decay())
    out.append(experiment_wedge_convergence(seed=seed))
    return out


_FIXED_ROWS = {
    "metric-lemmas": _metric_corpus,
    "sum-bounds": _gap_tail_rows,
    "decomposition": _merge_negative_rows,
}


def replay(failure: dict) -> list[Row]:
    """Recompute the rows of one serialized failure."""
    suite = failure["suite"]
    if suite in _INSTANCE_FNS:
        rows = _FIXED_ROWS.get(suite, list)() + _INSTANCE_FNS[suite](failure["seed"], failure["index"])
        return [r for r in rows if isinstance(r, Row) and r.instance == failure["instance"]]
    params = dict(failure.get("params") or {})
    if suite == "ball-decay":
        b = params.pop("base")
        base = FiniteMmSpace(np.array(b["dist"], dtype=float), b["weights"])
        rep = experiment_product_ball_decay(base, **params)
    elif suite == "wedge":
        rep = experiment_wedge_convergence(seed=failure["seed"], **params)
    else:
        rep = EXPERIMENTS[suite](**params)
    return [r for r in rep.rows if r.instance == failure["instance"]]
