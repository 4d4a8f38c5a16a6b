import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmpyramids import (
    FiniteMmSpace,
    InvalidParameter,
    LipschitzFunction,
    MeasureOnSpace,
    covering_number,
    cycle_space,
    dissipation_space,
    eps_supporting_net,
    lipschitz_dominates,
    obs_diameter,
    one_point,
    partial_diameter,
    scale,
    separation_distance,
    two_point,
)
from mmpyramids.harness import random_space

import oracles


def spaces(n_max=6, n_min=1):
    return st.integers(0, 2**32 - 1).map(
        lambda s: random_space(np.random.default_rng(s), n_max=n_max, n_min=n_min))


def pd(X, need):
    return partial_diameter(MeasureOnSpace.of(X), need)


LINE3 = FiniteMmSpace([[0, 1, 2], [1, 0, 1], [2, 1, 0]], [1 / 3] * 3)


def test_lipschitz_function_checked():
    LipschitzFunction(two_point(1), [0, 1])
    with pytest.raises(InvalidParameter):
        LipschitzFunction(two_point(1), [0, 1.5])


def test_partial_diameter_examples():
    X = cycle_space(5)
    assert pd(X, 1.0) == X.diameter()
    assert pd(two_point(3), 0.4) == 0
    # enumeration oracle: no pair has mass 0.7, so all three points are needed
    assert pd(LINE3, 0.7) == 2
    assert oracles.partial_diameter_bruteforce(LINE3.dist, np.asarray(LINE3.weight), 0.7) == 2
    assert pd(LINE3, 0.6) == 1
    assert pd(LINE3, 0.0) == 0


@settings(max_examples=80, deadline=None)
@given(spaces(7), st.floats(0.01, 1.0))
def test_partial_diameter_matches_enumeration(X, need):
    ref = oracles.partial_diameter_bruteforce(X.dist, np.asarray(X.weight), need)
    assert pd(X, need) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(spaces(7), st.floats(0.01, 0.98), st.floats(0.01, 0.98))
def test_partial_diameter_monotone(X, k1, k2):
    k1, k2 = sorted((k1, k2))
    assert pd(X, 1 - k1) >= pd(X, 1 - k2)


def test_obs_diameter_examples():
    assert (obs_diameter(one_point(), 0.3).lower, obs_diameter(one_point(), 0.3).upper) == (0, 0)
    for length in (0.5, 2.0, 7.0):
        I = obs_diameter(two_point(length), 0.3)
        assert I.lower == I.upper == length
        I = obs_diameter(two_point(length), 0.6)
        assert I.lower == I.upper == 0
        I = obs_diameter(two_point(length), 0.5)
        assert I.lower == I.upper == 0


@settings(max_examples=30, deadline=None)
@given(spaces(6), st.floats(0.05, 0.45))
def test_obs_diameter_interval_is_sound(X, kappa):
    I = obs_diameter(X, kappa)
    assert I.lower <= I.upper + 1e-9
    assert I.upper <= X.diameter() + 1e-12
    # the distance to any single point is 1-Lipschitz, so it is a lower witness
    for i in range(X.n):
        f = X.dist[i]
        line = FiniteMmSpace(np.abs(f[:, None] - f[None, :]), X.weight, validate=False)
        assert I.lower >= pd(line, 1 - kappa) - 1e-9


@settings(max_examples=30, deadline=None)
@given(spaces(6, n_min=2), st.floats(0.05, 0.45))
def test_obs_diameter_zero_only_for_point(X, kappa):
    # a space with two or more points has positive ObsDiam at some small kappa
    I = obs_diameter(X, min(kappa, 0.5 * float(np.min(X.weight))))
    assert I.upper > 0


def test_separation_examples():
    for n in (4, 5, 8, 12):
        assert separation_distance(dissipation_space(n), [0.25, 0.25]) == n
    assert separation_distance(two_point(3), [0.5, 0.5]) == 3
    assert separation_distance(cycle_space(4), [0.6, 0.55]) == 0
    assert separation_distance(dissipation_space(3), [0.6, 0.6]) == 0


@settings(max_examples=60, deadline=None)
@given(spaces(6), st.lists(st.floats(0.01, 0.5), min_size=2, max_size=3))
def test_separation_matches_enumeration(X, kappas):
    if sum(kappas) > 1:
        kappas = [k / sum(kappas) for k in kappas]
    ref = oracles.sep_bruteforce(X.dist, np.asarray(X.weight), kappas)
    assert separation_distance(X, kappas) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(spaces(7), st.floats(0.01, 0.45), st.floats(0.01, 0.45), st.floats(0.0, 0.1))
def test_separation_monotone_in_kappa(X, k0, k1, bump):
    base = separation_distance(X, [k0, k1])
    assert separation_distance(X, [k0 + bump, k1]) <= base
    assert separation_distance(X, [k0, k1 + bump]) <= base


def test_covering_examples():
    X = cycle_space(6)
    assert covering_number(X, X.diameter(), 0.2) == 1
    for n in (4, 8, 16):
        assert covering_number(dissipation_space(n), 0.5, 0.25) == math.ceil(3 * n / 4)
    assert covering_number(X, 0.1, 0.999) >= 1
    with pytest.raises(InvalidParameter):
        covering_number(X, 0.1, 1.0)


@settings(max_examples=60, deadline=None)
@given(spaces(7), st.floats(0.01, 2.0), st.floats(0.01, 0.9))
def test_covering_matches_enumeration(X, r, kappa):
    ref = oracles.cov_bruteforce(X.dist, np.asarray(X.weight), r, kappa)
    assert covering_number(X, r, kappa) == ref


@settings(max_examples=40, deadline=None)
@given(spaces(7), st.floats(0.01, 2.0), st.floats(0.0, 1.0), st.floats(0.01, 0.9), st.floats(0.0, 0.09))
def test_covering_monotone(X, r, dr, kappa, dk):
    c = covering_number(X, r, kappa)
    assert covering_number(X, r + dr, kappa) <= c
    assert covering_number(X, r, kappa + dk) <= c


@settings(max_examples=40, deadline=None)
@given(spaces(6), st.integers(0, 2**32 - 1), st.floats(0.05, 2.0), st.floats(0.01, 0.8))
def test_covering_monotone_under_domination(Y, s, r, kappa):
    # X is a 1-Lipschitz image of Y, so Y dominates X
    rng = np.random.default_rng(s)
    f = rng.integers(0, Y.n, Y.n)
    img = sorted(set(f.tolist()))
    X = FiniteMmSpace(Y.dist[np.ix_(img, img)] * rng.uniform(0.2, 1.0),
                      [float(np.asarray(Y.weight)[f == k].sum()) for k in img])
    if lipschitz_dominates(Y, X).holds:
        assert covering_number(X, r, kappa) <= covering_number(Y, r, kappa)


def test_supporting_net():
    assert len(eps_supporting_net(two_point(0.1), 0.5)) == 1
    for n in (4, 8):
        assert len(eps_supporting_net(dissipation_space(n), 0.25)) == math.ceil(3 * n / 4)


@settings(max_examples=40, deadline=None)
@given(spaces(7), st.floats(0.01, 0.99))
def test_supporting_net_postcondition(X, eps):
    N = eps_supporting_net(X, eps)
    covered = np.min(X.dist[N], axis=0) <= eps
    assert np.asarray(X.weight)[covered].sum() >= 1 - eps - 1e-12
    assert len(N) == oracles.cov_bruteforce(X.dist, np.asarray(X.weight), eps, eps)


@settings(max_examples=20, deadline=None)
@given(spaces(6), st.sampled_from([0.5, 2.0, 10.0]), st.floats(0.05, 0.45))
def test_invariants_scale_bitwise(X, t, kappa):
    tX = scale(X, t)
    a, b = obs_diameter(X, kappa), obs_diameter(tX, kappa)
    assert b.lower == t * a.lower and b.upper == t * a.upper
    assert separation_distance(tX, [kappa, kappa]) == t * separation_distance(X, [kappa, kappa])
    assert pd(tX, 1 - kappa) == t * pd(X, 1 - kappa)


@settings(max_examples=20, deadline=None)
@given(spaces(6), st.floats(0.05, 0.45), st.floats(0.05, 1.0))
def test_sandwich(X, kappa, shrink):
    sep = separation_distance(X, [kappa, kappa])
    assert sep <= obs_diameter(X, kappa * shrink).upper + 1e-9
    assert obs_diameter(X, 2 * kappa).lower <= sep + 1e-9 or 2 * kappa >= 1
