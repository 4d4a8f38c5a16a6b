"""Brute-force reference implementations used only by the tests.

They share no code with the package: everything here enumerates subsets
directly and uses scipy's LP solver for couplings.
"""
import itertools

import numpy as np
from scipy.optimize import linprog


def subsets(n):
    for k in range(n + 1):
        yield from itertools.combinations(range(n), k)


def prokhorov_holds(d, mu, nu, eps):
    """Does mu(U_eps(A)) >= nu(A) - eps hold for every A (open balls)?"""
    n = len(mu)
    for A in subsets(n):
        if not A:
            continue
        near = np.min(d[list(A)], axis=0) < eps
        if mu[near].sum() < nu[list(A)].sum() - eps - 1e-12:
            return False
    return True


def prokhorov_grid(d, mu, nu, step=1e-3):
    """Smallest grid point at which the defining condition holds."""
    lo, hi = 0.0, 1.0 + step
    grid = np.arange(lo, hi, step)
    ok = [prokhorov_holds(d, mu, nu, e) for e in grid]
    return grid[ok.index(True)]


def tv_subsets(mu, nu):
    return max(abs(mu[list(A)].sum() - nu[list(A)].sum()) for A in subsets(len(mu)))


def max_coupling_lp(S, mu, nu):
    n, m = len(mu), len(nu)
    c = np.zeros(n * m)
    for x, y in S:
        c[x * m + y] = -1
    A_eq, b_eq = [], []
    for x in range(n):
        row = np.zeros(n * m)
        row[x * m:(x + 1) * m] = 1
        A_eq.append(row)
        b_eq.append(mu[x])
    for y in range(m):
        row = np.zeros(n * m)
        row[y::m] = 1
        A_eq.append(row)
        b_eq.append(nu[y])
    res = linprog(c, A_eq=np.array(A_eq), b_eq=b_eq, bounds=(0, None), method="highs")
    return -res.fun


def box_bruteforce(dx, wx, dy, wy):
    """min over all S of max(dis S, 1 - max coupling mass of S)."""
    pairs = list(itertools.product(range(len(wx)), range(len(wy))))
    best = 1.0
    for S in subsets(len(pairs)):
        if not S:
            continue
        P = [pairs[i] for i in S]
        dis = max(abs(dx[a, c] - dy[b, e]) for (a, b), (c, e) in itertools.product(P, repeat=2))
        if dis >= best:
            continue
        best = min(best, max(dis, 1 - max_coupling_lp(P, wx, wy)))
    return best


def partial_diameter_bruteforce(d, w, need):
    best = np.inf
    for A in subsets(len(w)):
        if w[list(A)].sum() >= need - 1e-12:
            best = min(best, d[np.ix_(A, A)].max() if A else 0.0)
    return best


def sep_bruteforce(d, w, kappas):
    """Assign every point to one of the groups or to nothing."""
    k = len(kappas)
    best = 0.0
    for lab in itertools.product(range(-1, k), repeat=len(w)):
        lab = np.array(lab)
        if any(w[lab == g].sum() < kappas[g] - 1e-12 for g in range(k)):
            continue
        if any(not np.any(lab == g) for g in range(k)):
            continue
        sep = min(d[np.ix_(lab == g, lab == h)].min() for g in range(k) for h in range(g + 1, k))
        best = max(best, sep)
    return best


def cov_bruteforce(d, w, r, kappa):
    n = len(w)
    for k in range(0, n + 1):
        for N in itertools.combinations(range(n), k):
            covered = np.min(d[list(N)], axis=0) <= r if N else np.zeros(n, bool)
            if w[covered].sum() >= 1 - kappa - 1e-12:
                return k
    return n
