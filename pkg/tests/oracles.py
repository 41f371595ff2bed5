"""Independent reference implementations used as test oracles.

Nothing here imports the package under test: each function re-derives its
value from first principles (loops, dense scipy routines, brute force).
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import scipy.linalg


def chol_loops(A):
    """Cholesky-Banachiewicz with explicit loops."""
    A = np.asarray(A, dtype=float)
    n = len(A)
    L = np.zeros_like(A)
    for i in range(n):
        for j in range(i + 1):
            s = sum(L[i, k] * L[j, k] for k in range(j))
            if i == j:
                L[i, j] = math.sqrt(A[i, i] - s)
            else:
                L[i, j] = (A[i, j] - s) / L[j, j]
    return L


def theta_oracle(C):
    L = chol_loops(C)
    return np.diag(1.0 / np.diag(L)) @ L


def log_theta_oracle(C):
    return np.real(scipy.linalg.logm(theta_oracle(C)))


def ecm_oracle(A, B):
    return float(np.linalg.norm(theta_oracle(A) - theta_oracle(B), "fro"))


def lec_oracle(A, B):
    return float(np.linalg.norm(log_theta_oracle(A) - log_theta_oracle(B), "fro"))


def airm_oracle(A, B):
    # generalized eigenvalues of (B, A) are the eigenvalues of A^-1 B
    w = scipy.linalg.eigh(B, A, eigvals_only=True)
    return float(np.sqrt(np.sum(np.log(w) ** 2)))


def corr2(r):
    return np.array([[1.0, r], [r, 1.0]])


def qam_grid_n2(A, B, lo=-5.0, hi=5.0, step=1e-4):
    """QAM distance for 2x2 inputs by exhaustive search.

    ``D = c diag(1, e^t)``; for each ``t`` on the grid the optimal scalar
    ``c`` is closed form (it shifts both log-eigenvalues by ``2 log c``, so
    the optimum centers them). Eigenvalues of the 2x2 product come from its
    trace and determinant.
    """
    Ai = np.linalg.inv(A)
    t = np.arange(lo, hi + step / 2, step)
    e = np.exp(t)
    # M(t) = Ai D B D with D = diag(1, e)
    d = np.stack([np.ones_like(e), e], axis=1)
    M = np.einsum("ij,tj,jk,tk->tik", Ai, d, B, d)
    tr = M[:, 0, 0] + M[:, 1, 1]
    det = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
    disc = np.sqrt(np.maximum(tr * tr / 4 - det, 0.0))
    l1, l2 = tr / 2 + disc, tr / 2 - disc
    # centered sum of squares of (log l1, log l2) is (log l1 - log l2)^2 / 2
    f = 0.5 * np.log(l1 / l2) ** 2
    return math.sqrt(float(f.min()))


def wasserstein_bruteforce(X, Y, dist):
    """Order-2 optimal assignment cost over all permutations (equal sizes)."""
    m = len(X)
    C = np.array([[dist(x, y) ** 2 for y in Y] for x in X])
    best = min(sum(C[i, p[i]] for i in range(m)) for p in itertools.permutations(range(m)))
    return math.sqrt(best / m)


def energy_double_sum(X, Y, dist):
    m1, m2 = len(X), len(Y)
    xy = sum(dist(x, y) for x in X for y in Y) / (m1 * m2)
    xx = sum(dist(a, b) for a in X for b in X) / m1 ** 2
    yy = sum(dist(a, b) for a in Y for b in Y) / m2 ** 2
    return max(2 * xy - xx - yy, 0.0)


def mmd_double_sum(X, Y, dist, theta=1.0):
    k = lambda a, b: math.exp(-theta * dist(a, b) ** 2)  # noqa: E731
    m1, m2 = len(X), len(Y)
    xx = sum(k(a, b) for a in X for b in X) / m1 ** 2
    yy = sum(k(a, b) for a in Y for b in Y) / m2 ** 2
    xy = sum(k(a, b) for a in X for b in Y) / (m1 * m2)
    return xx + yy - 2 * xy


def bg_double_sum(X, Y, dist):
    m1, m2 = len(X), len(Y)
    mu11 = sum(dist(a, b) for a in X for b in X) / m1 ** 2
    mu22 = sum(dist(a, b) for a in Y for b in Y) / m2 ** 2
    mu12 = sum(dist(a, b) for a in X for b in Y) / (m1 * m2)
    return (mu11 - mu12) ** 2 + (mu22 - mu12) ** 2


def random_corr(n, rng):
    """Independent sampler: normalize G G^T + small ridge."""
    G = rng.standard_normal((n, 2 * n))
    S = G @ G.T / (2 * n) + 0.05 * np.eye(n)
    d = 1.0 / np.sqrt(np.diag(S))
    C = S * d[:, None] * d[None, :]
    C = 0.5 * (C + C.T)
    np.fill_diagonal(C, 1.0)
    return C


def adjusted_rand(a, b):
    """Adjusted Rand index from the contingency table."""
    a = np.asarray(a)
    b = np.asarray(b)
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    table = np.zeros((len(ua), len(ub)))
    np.add.at(table, (ia, ib), 1)
    comb = lambda x: x * (x - 1) / 2  # noqa: E731
    s = comb(table).sum()
    sa = comb(table.sum(axis=1)).sum()
    sb = comb(table.sum(axis=0)).sum()
    expected = sa * sb / comb(len(a))
    top = 0.5 * (sa + sb)
    return 1.0 if top == expected else float((s - expected) / (top - expected))
