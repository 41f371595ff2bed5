"""k-means, k-medoids (PAM) and spectral clustering of correlation samples,
with Silhouette and Calinski-Harabasz validity indices."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import BadK, DataError, EmptyClusterRepair, SingletonClusterConvention
from .geometry import Geometry, _require_flat, distance_matrix, to_coords
from .samples import as_stack


class Method(str, Enum):
    KMEANS = "kmeans"
    KMEDOIDS = "kmedoids"
    SPECTRAL = "spectral"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DataError(f"unknown clustering method {value!r}") from None


@dataclass(frozen=True)
class ClusteringResult:
    labels: np.ndarray
    k: int
    inertia: float
    seed: int | None
    converged: bool
    method: str = "kmeans"
    centers: np.ndarray | None = None
    medoids: np.ndarray | None = None
    repaired: bool = False
    history: list = field(default_factory=list, compare=False)


def _check_k(k, m):
    if not isinstance(k, (int, np.integer)) or not 2 <= k <= m:
        raise BadK(f"k must be an integer in [2, {m}]; got {k!r}")


def _sqdist(X, centers):
    d = (np.sum(X ** 2, axis=1)[:, None] + np.sum(centers ** 2, axis=1)[None, :]
         - 2.0 * X @ centers.T)
    return np.maximum(d, 0.0)


def kmeans_pp(X, k, rng) -> np.ndarray:
    """k-means++ seeding; returns the chosen row indices."""
    m = len(X)
    chosen = [int(rng.integers(m))]
    best = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = best.sum()
        if total > 0:
            nxt = int(rng.choice(m, p=best / total))
        else:
            free = np.setdiff1d(np.arange(m), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        best = np.minimum(best, np.sum((X - X[nxt]) ** 2, axis=1))
    return np.array(chosen)


def _lloyd(X, k, rng, max_iter):
    centers = X[kmeans_pp(X, k, rng)].copy()
    labels = np.argmin(_sqdist(X, centers), axis=1)
    history = []
    repaired = False
    converged = False
    for _ in range(max_iter):
        # repair empty clusters with the point farthest from its own center
        counts = np.bincount(labels, minlength=k)
        while np.any(counts == 0):
            repaired = True
            empty = int(np.flatnonzero(counts == 0)[0])
            own = _sqdist(X, centers)[np.arange(len(X)), labels]
            own[counts[labels] <= 1] = -1.0
            far = int(np.argmax(own))
            labels[far] = empty
            counts = np.bincount(labels, minlength=k)
        centers = np.stack([X[labels == j].mean(axis=0) for j in range(k)])
        d = _sqdist(X, centers)
        history.append(float(d[np.arange(len(X)), labels].sum()))
        new = np.argmin(d, axis=1)
        if np.array_equal(new, labels):
            converged = True
            break
        labels = new
    inertia = float(_sqdist(X, centers)[np.arange(len(X)), labels].sum())
    return labels, centers, inertia, converged, repaired, history


def kmeans(X, k, seed=0, restarts: int = 10, max_iter: int = 300, workers: int = 1) -> ClusteringResult:
    """Lloyd's algorithm on row vectors, best of ``restarts`` k-means++ runs.

    Restart ``r`` uses the ``r``-th child of ``SeedSequence(seed)``, so the
    result does not depend on ``workers``. Ties in inertia go to the lowest
    restart index.
    """
    X = np.asarray(X, dtype=float)
    _check_k(k, len(X))
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(restarts)]
    run = lambda rng: _lloyd(X, k, rng, max_iter)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            runs = list(pool.map(run, streams))
    else:
        runs = [run(r) for r in streams]
    best = min(range(restarts), key=lambda r: (runs[r][2], r))
    labels, centers, inertia, converged, repaired, history = runs[best]
    if repaired:
        warnings.warn("an empty cluster was refilled with the farthest point",
                      EmptyClusterRepair, stacklevel=2)
    return ClusteringResult(labels, k, inertia, seed, converged, "kmeans", centers=centers,
                            repaired=repaired, history=history)


def pam(D, k, max_iter: int = 1000) -> ClusteringResult:
    """Partitioning Around Medoids (BUILD then greedy best-improvement SWAP)."""
    D = np.asarray(D, dtype=float)
    m = len(D)
    _check_k(k, m)
    medoids = [int(np.argmin(D.sum(axis=1)))]
    near = D[:, medoids[0]].copy()
    for _ in range(1, k):
        gain = np.maximum(near[:, None] - D, 0.0).sum(axis=0)
        gain[medoids] = -np.inf
        c = int(np.argmax(gain))
        medoids.append(c)
        near = np.minimum(near, D[:, c])
    medoids = np.array(medoids)
    cost = float(D[:, medoids].min(axis=1).sum())
    history = [cost]
    converged = False
    for _ in range(max_iter):
        Dm = D[:, medoids]
        order = np.argsort(Dm, axis=1, kind="stable")
        nearest = Dm[np.arange(m), order[:, 0]]
        second = Dm[np.arange(m), order[:, 1]] if k > 1 else np.full(m, np.inf)
        best_delta, best_swap = -1e-12 * max(cost, 1.0), None
        for i in range(k):
            without = np.where(order[:, 0] == i, second, nearest)
            new_cost = np.minimum(without[:, None], D).sum(axis=0)
            new_cost[medoids] = np.inf
            h = int(np.argmin(new_cost))
            delta = new_cost[h] - cost
            if delta < best_delta:
                best_delta, best_swap = delta, (i, h)
        if best_swap is None:
            converged = True
            break
        medoids[best_swap[0]] = best_swap[1]
        cost = float(D[:, medoids].min(axis=1).sum())
        history.append(cost)
    labels = np.argmin(D[:, medoids], axis=1)
    return ClusteringResult(labels, k, cost, None, converged, "kmedoids", medoids=medoids.copy(),
                            history=history)


def spectral_embedding(D, k, theta=None) -> np.ndarray:
    """Row-normalized top-``k`` eigenvectors of the normalized affinity.

    Affinity ``exp(-theta d^2)`` with a zero diagonal; ``theta`` defaults to
    ``1 / median(d^2)`` over distinct pairs.
    """
    D = np.asarray(D, dtype=float)
    m = len(D)
    D2 = D ** 2
    if theta is None:
        med = np.median(D2[np.triu_indices(m, 1)])
        theta = 1.0 / med if med > 0 else 1.0
    A = np.exp(-theta * D2)
    np.fill_diagonal(A, 0.0)
    deg = A.sum(axis=1)
    inv = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    Nm = inv[:, None] * A * inv[None, :]
    # smallest eigenvectors of I - Nm are the largest of Nm
    w, V = np.linalg.eigh(0.5 * (Nm + Nm.T))
    U = V[:, np.argsort(w)[::-1][:k]]
    norms = np.linalg.norm(U, axis=1, keepdims=True)
    return U / np.where(norms > 0, norms, 1.0)


def within_dispersion(D, labels) -> float:
    """``sum_j sum_{a,b in j} d_ab^2 / (2 |j|)``: the k-means inertia for
    Euclidean distances, computable from any distance matrix."""
    D2 = np.asarray(D, dtype=float) ** 2
    total = 0.0
    for j in np.unique(labels):
        idx = np.flatnonzero(labels == j)
        total += D2[np.ix_(idx, idx)].sum() / (2.0 * len(idx))
    return float(total)


def cluster(method, samples, k: int, geometry="ecm", seed=0, *, restarts: int = 10,
            max_iter: int = 300, theta=None, workers: int = 1, distances=None) -> ClusteringResult:
    """Cluster a sample set.

    KMEANS runs on flat coordinates (ECM/LEC); KMEDOIDS and SPECTRAL use the
    pairwise distance matrix under ``geometry`` (or ``distances`` if given).
    """
    method = Method.parse(method)
    g = Geometry.parse(geometry)
    C = as_stack(samples)
    _check_k(k, len(C))
    if method is Method.KMEANS:
        X = to_coords(C, _require_flat(g))
        return kmeans(X, k, seed, restarts, max_iter, workers)
    D = distances if distances is not None else distance_matrix(C, geometry=g, workers=workers)
    if method is Method.KMEDOIDS:
        return pam(D, k)
    U = spectral_embedding(D, k, theta)
    inner = kmeans(U, k, seed, restarts, max_iter, workers)
    labels = inner.labels
    return ClusteringResult(labels, k, within_dispersion(D, labels), seed, inner.converged,
                            "spectral", repaired=inner.repaired)


# ---------------------------------------------------------------------------
# validity indices


def silhouette(D, labels) -> float:
    """Mean silhouette width from a distance matrix; singletons score 0."""
    D = np.asarray(D, dtype=float)
    labels = np.asarray(labels)
    uniq, inv, counts = np.unique(labels, return_inverse=True, return_counts=True)
    if not 2 <= len(uniq) <= len(labels) - 1:
        raise BadK("silhouette needs 2 <= k <= m - 1")
    sums = np.stack([D[:, inv == j].sum(axis=1) for j in range(len(uniq))], axis=1)
    own = counts[inv]
    with np.errstate(invalid="ignore", divide="ignore"):
        a = sums[np.arange(len(D)), inv] / (own - 1)
        means = sums / counts[None, :]
    means[np.arange(len(D)), inv] = np.inf
    b = means.min(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = (b - a) / np.maximum(a, b)
    single = own == 1
    if np.any(single):
        warnings.warn("singleton clusters contribute a silhouette of 0",
                      SingletonClusterConvention, stacklevel=2)
    s = np.where(single | ~np.isfinite(s), 0.0, s)
    return float(np.mean(s))


def calinski_harabasz(X, labels) -> float:
    """``(B / (k - 1)) / (W / (m - k))`` for row vectors ``X``."""
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    m, k = len(X), len(uniq)
    if not 2 <= k <= m - 1:
        raise BadK("Calinski-Harabasz needs 2 <= k <= m - 1")
    mu = X.mean(axis=0)
    B = W = 0.0
    for j in uniq:
        Xj = X[labels == j]
        cj = Xj.mean(axis=0)
        B += len(Xj) * np.sum((cj - mu) ** 2)
        W += np.sum((Xj - cj) ** 2)
    if W == 0:
        return float("inf")
    return float((B / (k - 1)) / (W / (m - k)))


def validity(kind, samples, labels, geometry="ecm") -> float:
    """``kind`` is ``"silhouette"`` (geometry distances) or ``"ch"``
    (flat coordinates)."""
    kind = str(kind).lower()
    C = as_stack(samples)
    if len(labels) != len(C):
        raise DataError("labels length must equal the number of samples")
    if kind == "silhouette":
        return silhouette(distance_matrix(C, geometry=geometry), labels)
    if kind in ("ch", "calinski-harabasz"):
        return calinski_harabasz(to_coords(C, _require_flat(geometry)), labels)
    raise DataError(f"unknown validity index {kind!r}")
