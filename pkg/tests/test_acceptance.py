"""One test per acceptance criterion; each prints a PASS/FAIL line."""
import itertools
import math
import time

import numpy as np

from mmpyramids import (
    INF,
    MeasureOnSpace,
    PointedSpace,
    PyramidApprox,
    atoms_limit_of_scaling,
    box_distance_exact,
    covering_number,
    decompose_extended,
    direct_sum,
    direct_sum_pyramids,
    dissipation_space,
    gapped_sum,
    l1_distance,
    lipschitz_dominates,
    lp_product,
    mm_isomorphic,
    obs_diameter,
    one_point,
    partial_diameter,
    prokhorov_flow,
    prokhorov_subset_oracle,
    scale,
    separation_distance,
    two_point,
)
from mmpyramids import harness
from mmpyramids.cli import main
from mmpyramids.harness import image_space, random_lipschitz_map, random_measure, random_space


def shuffled(Z, rng):
    perm = rng.permutation(Z.n)
    return type(Z)(Z.dist[np.ix_(perm, perm)], np.asarray(Z.weight)[perm],
                   [("relabel", int(k)) for k in range(Z.n)])


def test_1_prokhorov_cross_validation(verdict):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst, count = 0.0, 500
    for _ in range(count):
        X = random_space(rng, n_max=10)
        mu, nu = random_measure(rng, X), random_measure(rng, X)
        worst = max(worst, abs(prokhorov_flow(mu, nu) - prokhorov_subset_oracle(mu, nu)))
    elapsed = time.perf_counter() - t0
    verdict(1, "Prokhorov flow = subset oracle", worst <= 1e-9 and elapsed < 60,
            f"{count} instances, max |diff| {worst:.2e}, {elapsed:.1f} s")


def test_2_metric_lemma_suite(verdict):
    rep = harness.check_metric_lemmas(seed=7, count=200)
    needed = ("dP<=dTV", "box<=2dP", "box<=3eps", "box(A,X)<=4(1-mu(A))")
    counts = {c: rep.instances(c) for c in needed}
    slack = rep.min_slack()
    ok = all(counts[c] >= 200 for c in needed) and all(slack[c] >= -1e-9 for c in needed)
    verdict(2, "metric-lemma suite", ok and rep.passed,
            ", ".join(f"{c}: n={counts[c]} min slack {slack[c]:.2e}" for c in needed))


def test_3_box_sanity(verdict):
    exact = all(box_distance_exact(one_point(), two_point(l, (0.5, 0.5))) == min(l, 0.5)
                for l in (0.1, 0.5, 0.9, 2.0))
    rng = np.random.default_rng(3)
    self_zero = all(box_distance_exact(X, X) == 0
                    for X in (random_space(rng, n_max=4, n_min=1) for _ in range(50)))
    verdict(3, "box oracle sanity", exact and self_zero, f"closed forms {exact}, 50 self-distances zero {self_zero}")


def test_4_closed_forms(verdict):
    sep = [separation_distance(dissipation_space(n), [0.25, 0.25]) for n in (4, 8, 16)]
    cov = [covering_number(dissipation_space(n), 0.5, 0.25) for n in (4, 8, 16)]
    od = []
    for l in (0.1, 0.5, 2.0, 7.0):
        a, b = obs_diameter(two_point(l, (0.5, 0.5)), 0.3), obs_diameter(two_point(l, (0.5, 0.5)), 0.6)
        od.append((a.lower, a.upper, b.lower, b.upper) == (l, l, 0, 0))
    ok = sep == [4, 8, 16] and cov == [3, 6, 12] and all(od)
    verdict(4, "closed-form invariants", ok, f"Sep {sep}, Cov {cov}, ObsDiam {all(od)}")


def test_5_scaling(verdict):
    rng = np.random.default_rng(5)
    bad = 0
    for _ in range(100):
        X = random_space(rng, n_max=6)
        kappa = float(rng.uniform(0.05, 0.45))
        od = obs_diameter(X, kappa)
        sep = separation_distance(X, [kappa, kappa])
        pd = partial_diameter(MeasureOnSpace.of(X), 1 - kappa)
        for t in (0.5, 2.0, 10.0):
            Xt = scale(X, t)
            odt = obs_diameter(Xt, kappa)
            same = (odt.lower == t * od.lower and odt.upper == t * od.upper
                    and separation_distance(Xt, [kappa, kappa]) == t * sep
                    and partial_diameter(MeasureOnSpace.of(Xt), 1 - kappa) == t * pd)
            bad += not same
    verdict(5, "scaling is bit-exact", bad == 0, f"300 comparisons, {bad} mismatches")


def test_6_covering_monotone(verdict):
    rng = np.random.default_rng(6)
    pairs = violations = tries = 0
    while pairs < 100 and tries < 1000:
        tries += 1
        Y = random_space(rng, n_max=7)
        F = random_lipschitz_map(Y.dist, int(rng.integers(1, 3)), Y.diameter() + 1.0, rng)
        X, _ = image_space(F, np.asarray(Y.weight))
        if not lipschitz_dominates(Y, X):
            continue
        pairs += 1
        for _ in range(5):
            r = float(rng.uniform(0.01, 1.2) * Y.diameter())
            kappa = float(rng.uniform(0.01, 0.99))
            violations += covering_number(X, r, kappa) > covering_number(Y, r, kappa)
    verdict(6, "covering number monotone under domination", pairs >= 100 and violations == 0,
            f"{pairs} verified pairs, {violations} violations")


def _matches(D, parts, a):
    used = [False] * len(parts)
    for w, X in zip(D.weights, D.parts):
        j = next((j for j, (b, Y) in enumerate(zip(a, parts))
                  if not used[j] and abs(w - b) <= 1e-9 and mm_isomorphic(X, Y)), None)
        if j is None:
            return False
        used[j] = True
    return len(D.parts) == len(parts) and all(used)


def test_7_decomposition(verdict):
    rng = np.random.default_rng(7)
    round_trip = canonical = 0
    for _ in range(200):
        k = int(rng.integers(1, 6))
        parts = [random_space(rng, n_max=6, n_min=1) for _ in range(k)]
        a = rng.dirichlet(np.ones(k))
        D = decompose_extended(direct_sum(parts, a))
        round_trip += _matches(D, parts, a)
        order = rng.permutation(k)
        Z2 = shuffled(direct_sum([shuffled(parts[j], rng) for j in order], a[order]), rng)
        D2 = decompose_extended(Z2)
        canonical += D2.keys == D.keys and l1_distance(D2.weights.entries, D.weights.entries) <= 1e-12
    verdict(7, "decomposition round trip and uniqueness", round_trip == 200 and canonical == 200,
            f"round trip {round_trip}/200, canonical {canonical}/200")


def test_8_atoms_recovery(verdict):
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(50):
        A = rng.dirichlet(np.ones(int(rng.integers(1, 5))))
        parts = [random_space(rng, n_max=4, n_min=1, scale_range=(0.1, 1.0)) for _ in A]
        P = direct_sum_pyramids([PyramidApprox.of_space(X) for X in parts], A, gaps=(8, 16))
        got = atoms_limit_of_scaling(P).value.entries
        worst = max(worst, l1_distance(got, tuple(sorted(A, reverse=True))))
    verdict(8, "atoms limit recovers weights", worst <= 1e-6, f"50 vectors, max l1 error {worst:.2e}")


def test_9_algebraic_laws(verdict):
    rng = np.random.default_rng(9)
    fails = {"associativity": 0, "distributivity": 0}
    for i in range(100):
        p = (1.0, 2.0, INF)[i % 3]
        X, Y, Z = (random_space(rng, n_max=3, n_min=1) for _ in range(3))
        fails["associativity"] += not mm_isomorphic(lp_product(lp_product(X, Y, p), Z, p),
                                                    lp_product(X, lp_product(Y, Z, p), p))
        k = int(rng.integers(2, 4))
        parts = [random_space(rng, n_max=3, n_min=1) for _ in range(k)]
        a = rng.dirichlet(np.ones(k))
        inner = direct_sum(parts[:2], a[:2] / a[:2].sum())
        fails["associativity"] += not mm_isomorphic(direct_sum([inner] + parts[2:], [a[:2].sum()] + list(a[2:])),
                                                    direct_sum(parts, a))
        t, r = float(rng.uniform(0.2, 5)), float(rng.uniform(0.5, 5))
        fails["associativity"] += not mm_isomorphic(
            scale(gapped_sum([PointedSpace(P, 0) for P in parts], a, r), t),
            gapped_sum([PointedSpace(scale(P, t), 0) for P in parts], a, t * r))
        qs = [random_space(rng, n_max=3, n_min=1) for _ in range(2)]
        b = rng.dirichlet(np.ones(2))
        lhs = lp_product(direct_sum(parts, a), direct_sum(qs, b), p)
        rhs = direct_sum([lp_product(P, Q, p) for P in parts for Q in qs], [x * y for x in a for y in b])
        fails["distributivity"] += not mm_isomorphic(lhs, rhs)
    verdict(9, "algebraic laws", not any(fails.values()), f"100 instances each, failures {fails}")


def _enumerated_ball_mass(n: int, r: float) -> float:
    cube = list(itertools.product((0.0, 1.0), repeat=n))
    best = 0.0
    for x in cube:
        inside = sum(1 for y in cube if math.dist(x, y) < r)
        best = max(best, inside / len(cube))
    return best


def test_10_ball_decay(verdict):
    rep = harness.experiment_product_ball_decay(two_point(1.0, (0.5, 0.5)), 2.0, 0.4, (1, 2, 4))
    got = [r.lhs for r in rep.rows if r.check == "mass<=mass(n0)^floor(n/n0)"]
    ref = [_enumerated_ball_mass(n, 0.4) for n in (1, 2, 4)]
    ok = (got == ref and all(b <= a for a, b in zip(got, got[1:]))
          and all(m <= got[0] ** n for m, n in zip(got, (1, 2, 4))) and rep.passed)
    verdict(10, "product ball-mass decay", ok, f"masses {got}, enumerated {ref}")


def test_11_wedge(verdict):
    rep = harness.experiment_wedge_convergence(6, (1, 2), 0.5)
    trends = {r.check: r.ok for r in rep.rows if r.check.endswith("-increasing")}
    swap = [r.ok for r in rep.rows if r.check == "swap-symmetry"]
    ok = rep.passed and len(trends) == 3 and all(trends.values()) and len(swap) == 2 and all(swap)
    verdict(11, "wedge experiment", ok, f"trends {trends}, swap symmetry {swap}")


def test_12_determinism(verdict, tmp_path, capsys):
    same = {}
    for name, fn in harness.SUITES.items():
        same[name] = fn(11, count=30).to_csv() == fn(11, count=30).to_csv()
    for name in ("dissipation", "ball-decay", "wedge"):
        fn = harness.EXPERIMENTS[name]
        same[name] = fn().to_csv() == fn().to_csv()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["check", "all", "--seed", "11", "--count", "10", "--out", str(a)])
    main(["check", "all", "--seed", "11", "--count", "10", "--out", str(b)])
    capsys.readouterr()
    same["cli check all"] = a.read_bytes() == b.read_bytes()
    verdict(12, "byte-identical reruns", all(same.values()), ", ".join(f"{k} {v}" for k, v in same.items()))
