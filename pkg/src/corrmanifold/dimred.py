"""Low-dimensional embeddings of correlation samples.

PGA and the autoencoder give explicit maps (with inverses back onto the
manifold); classical MDS, metric MDS (SMACOF) and t-SNE are transductive and
work from a distance matrix.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BadPerplexity, DataError, NonconvergedFlag, RankDeficient
from .geometry import Geometry, _require_flat, distance_matrix, from_coords, to_coords
from .samples import as_stack


@dataclass(frozen=True)
class EmbeddingResult:
    points: np.ndarray
    method: str
    stress_or_loss: float
    explained_variance: np.ndarray | None = None
    converged: bool = True
    history: list = field(default_factory=list, compare=False)


def check_distance_matrix(D) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise DataError("distance matrix must be square")
    if np.max(np.abs(D - D.T)) > 1e-10 or np.max(np.abs(np.diag(D))) > 1e-12:
        raise DataError("distance matrix must be symmetric with a zero diagonal")
    if np.any(D < 0):
        raise DataError("distances must be nonnegative")
    return 0.5 * (D + D.T)


def _pairdist(X):
    sq = np.sum(X ** 2, axis=1)
    D2 = np.maximum(sq[:, None] + sq[None, :] - 2 * X @ X.T, 0.0)
    np.fill_diagonal(D2, 0.0)
    return np.sqrt(D2)


def kruskal_stress(D, X) -> float:
    """Stress-1: ``sqrt(sum (d_ij - delta_ij)^2 / sum delta_ij^2)``."""
    E = _pairdist(X)
    iu = np.triu_indices(len(D), 1)
    den = np.sum(D[iu] ** 2)
    return float(np.sqrt(np.sum((E[iu] - D[iu]) ** 2) / den)) if den > 0 else 0.0


# ---------------------------------------------------------------------------
# PGA


@dataclass(frozen=True)
class PgaModel:
    base: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    n: int
    geometry: Geometry

    def transform(self, samples) -> np.ndarray:
        X = to_coords(as_stack(samples), self.geometry)
        return (X - self.base) @ self.components.T

    def reconstruct(self, scores) -> np.ndarray:
        scores = np.atleast_2d(np.asarray(scores, dtype=float))
        v = self.base + scores @ self.components
        return from_coords(v, self.n, self.geometry)


def pga(samples, d: int = 2, geometry="ecm"):
    """Principal geodesic analysis: PCA of the flat coordinates.

    Returns ``(PgaModel, EmbeddingResult)``. When fewer than ``d`` directions
    carry variance the available ones are returned and
    :class:`RankDeficient` is warned.
    """
    g = _require_flat(geometry)
    C = as_stack(samples)
    X = to_coords(C, g)
    m, k = X.shape
    if not 1 <= d <= min(max(m - 1, 1), k):
        raise DataError(f"d must lie in [1, min(m-1, {k})]")
    base = X.mean(axis=0)
    Xc = X - base
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    total = np.sum(s ** 2)
    rank = int(np.sum(s > 1e-10 * max(s[0], 1e-300))) if total > 0 else 0
    if rank < d:
        warnings.warn(f"only {rank} nonzero principal directions", RankDeficient, stacklevel=2)
        d = max(rank, 1)
    comps = vt[:d]
    ev = s[:d] ** 2 / total if total > 0 else np.zeros(d)
    scores = Xc @ comps.T
    resid = float(np.sum(s[d:] ** 2) / m)
    model = PgaModel(base, comps, ev, C.shape[1], g)
    return model, EmbeddingResult(scores, "pga", resid, ev)


# ---------------------------------------------------------------------------
# MDS


def cmds(D, d: int = 2) -> EmbeddingResult:
    """Classical (Torgerson) scaling of a distance matrix."""
    D = check_distance_matrix(D)
    m = len(D)
    J = np.eye(m) - 1.0 / m
    B = -0.5 * J @ (D ** 2) @ J
    w, V = np.linalg.eigh(0.5 * (B + B.T))
    order = np.argsort(w)[::-1][:d]
    lam = np.maximum(w[order], 0.0)
    X = V[:, order] * np.sqrt(lam)
    # deterministic sign: largest-magnitude entry of each axis positive
    flip = np.sign(X[np.argmax(np.abs(X), axis=0), np.arange(X.shape[1])])
    X = X * np.where(flip == 0, 1.0, flip)
    return EmbeddingResult(X, "cmds", kruskal_stress(D, X))


def _raw_stress(D, X):
    E = _pairdist(X)
    iu = np.triu_indices(len(D), 1)
    return float(np.sum((E[iu] - D[iu]) ** 2))


def smacof(D, d: int = 2, init=None, max_iter: int = 500, tol: float = 1e-9) -> EmbeddingResult:
    """Metric MDS by SMACOF (unit weights), initialized from classical MDS.

    Stops when the decrease in normalized raw stress falls below ``tol``.
    ``history`` holds the normalized stress after every iteration.
    """
    D = check_distance_matrix(D)
    m = len(D)
    X = cmds(D, d).points if init is None else np.array(init, dtype=float)
    iu = np.triu_indices(m, 1)
    scale = np.sum(D[iu] ** 2) or 1.0
    stress = _raw_stress(D, X) / scale
    history = [stress]
    converged = False
    for _ in range(max_iter):
        E = _pairdist(X)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(E > 0, D / E, 0.0)
        Bm = -ratio
        np.fill_diagonal(Bm, 0.0)
        np.fill_diagonal(Bm, -Bm.sum(axis=1))
        X = Bm @ X / m
        new = _raw_stress(D, X) / scale
        history.append(new)
        if stress - new < tol:
            converged = True
            stress = new
            break
        stress = new
    if not converged:
        warnings.warn("SMACOF hit the iteration cap", NonconvergedFlag, stacklevel=2)
    return EmbeddingResult(X, "mmds", kruskal_stress(D, X), converged=converged, history=history)


# ---------------------------------------------------------------------------
# t-SNE


def _conditional_p(D2, perplexity, tol=1e-5, max_steps=200):
    m = len(D2)
    target = np.log(perplexity)
    P = np.zeros((m, m))
    for i in range(m):
        di = np.delete(D2[i], i)
        lo, hi, beta = 0.0, np.inf, 1.0
        for _ in range(max_steps):
            e = np.exp(-(di - di.min()) * beta)
            s = e.sum()
            p = e / s
            H = -np.sum(p[p > 0] * np.log(p[p > 0]))
            if abs(H - target) < tol:
                break
            if H > target:
                lo = beta
                beta = beta * 2 if hi == np.inf else 0.5 * (beta + hi)
            else:
                hi = beta
                beta = 0.5 * (beta + lo)
        P[i, np.arange(m) != i] = p
    return P


def tsne(D, d: int = 2, perplexity: float = 30.0, seed=0, n_iter: int = 1000,
         learning_rate: float = 200.0, exaggeration: float = 12.0,
         exaggeration_iters: int = 250) -> EmbeddingResult:
    """Exact t-SNE from a distance matrix (conditional probabilities from
    squared distances, perplexity matched by bisection)."""
    D = check_distance_matrix(D)
    m = len(D)
    if not 1 < perplexity < m:
        raise BadPerplexity(f"perplexity must lie in (1, {m}); got {perplexity}")
    Pc = _conditional_p(D ** 2, perplexity)
    P = (Pc + Pc.T) / (2.0 * m)
    P = np.maximum(P, 1e-12)
    rng = np.random.default_rng(seed)
    Y = 1e-4 * rng.standard_normal((m, d))
    upd = np.zeros_like(Y)
    gains = np.ones_like(Y)
    kl = np.inf
    for it in range(n_iter):
        ex = exaggeration if it < exaggeration_iters else 1.0
        mom = 0.5 if it < exaggeration_iters else 0.8
        sq = np.sum(Y ** 2, axis=1)
        num = 1.0 / (1.0 + np.maximum(sq[:, None] + sq[None, :] - 2 * Y @ Y.T, 0.0))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), 1e-12)
        W = (ex * P - Q) * num
        grad = 4.0 * ((np.diag(W.sum(axis=1)) - W) @ Y)
        same = np.sign(grad) == np.sign(upd)
        gains = np.where(same, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        upd = mom * upd - learning_rate * gains * grad
        Y = Y + upd
        Y = Y - Y.mean(axis=0)
    off = ~np.eye(m, dtype=bool)
    kl = float(np.sum(P[off] * np.log(P[off] / Q[off])))
    return EmbeddingResult(Y, "tsne", max(kl, 0.0))


# ---------------------------------------------------------------------------
# shallow autoencoder


@dataclass(frozen=True)
class AutoencoderModel:
    weights: tuple
    mean: np.ndarray
    scale: float
    n: int
    geometry: Geometry

    def _enc(self, Z):
        W1, b1, W2, b2 = self.weights[:4]
        return np.tanh(Z @ W1 + b1) @ W2 + b2

    def _dec(self, H):
        W3, b3, W4, b4 = self.weights[4:]
        return np.tanh(H @ W3 + b3) @ W4 + b4

    def encode(self, samples) -> np.ndarray:
        X = to_coords(as_stack(samples), self.geometry)
        return self._enc((X - self.mean) / self.scale)

    def decode(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        v = self._dec(points) * self.scale + self.mean
        return from_coords(v, self.n, self.geometry)


def autoencoder(samples, d: int = 2, geometry="ecm", hidden: int = 32, seed=0,
                learning_rate: float = 0.05, momentum: float = 0.9, batch_size: int = 32,
                max_epochs: int = 3000, rel_tol: float = 1e-6, patience: int = 20):
    """Shallow autoencoder on flat coordinates.

    coordinates -> tanh(hidden) -> linear(d) -> tanh(hidden) -> linear
    output, mean squared loss, mini-batch gradient descent with momentum.
    Training stops once the best full-data loss has improved by less than
    ``rel_tol`` (relative) over ``patience`` consecutive epochs; the best
    weights seen are kept.
    Returns ``(AutoencoderModel, EmbeddingResult)``.
    """
    g = _require_flat(geometry)
    if hidden < d:
        raise DataError("hidden width must be >= embedding dimension")
    C = as_stack(samples)
    X = to_coords(C, g)
    m, k = X.shape
    mean = X.mean(axis=0)
    scale = float(X.std()) or 1.0
    Z = (X - mean) / scale
    rng = np.random.default_rng(seed)

    def glorot(a, b):
        return rng.uniform(-1, 1, (a, b)) * np.sqrt(6.0 / (a + b))

    params = [glorot(k, hidden), np.zeros(hidden), glorot(hidden, d), np.zeros(d),
              glorot(d, hidden), np.zeros(hidden), glorot(hidden, k), np.zeros(k)]
    vel = [np.zeros_like(p) for p in params]

    def forward(batch):
        W1, b1, W2, b2, W3, b3, W4, b4 = params
        h1 = np.tanh(batch @ W1 + b1)
        code = h1 @ W2 + b2
        h2 = np.tanh(code @ W3 + b3)
        out = h2 @ W4 + b4
        return h1, code, h2, out

    def loss_all():
        return float(np.mean((forward(Z)[3] - Z) ** 2))

    best = loss_all()
    best_params = [p.copy() for p in params]
    history = [best]
    stall = 0
    converged = False
    bs = min(batch_size, m)
    for _ in range(max_epochs):
        order = rng.permutation(m)
        for start in range(0, m, bs):
            idx = order[start:start + bs]
            xb = Z[idx]
            W1, b1, W2, b2, W3, b3, W4, b4 = params
            h1, code, h2, out = forward(xb)
            nb = len(idx)
            go = 2.0 * (out - xb) / (nb * k)
            gW4 = h2.T @ go
            gb4 = go.sum(0)
            gh2 = (go @ W4.T) * (1 - h2 ** 2)
            gW3 = code.T @ gh2
            gb3 = gh2.sum(0)
            gcode = gh2 @ W3.T
            gW2 = h1.T @ gcode
            gb2 = gcode.sum(0)
            gh1 = (gcode @ W2.T) * (1 - h1 ** 2)
            gW1 = xb.T @ gh1
            gb1 = gh1.sum(0)
            grads = [gW1, gb1, gW2, gb2, gW3, gb3, gW4, gb4]
            for p, v, gr in zip(params, vel, grads):
                v *= momentum
                v -= learning_rate * gr
                p += v
        cur = loss_all()
        history.append(cur)
        if not np.isfinite(cur):
            break
        if best - cur > rel_tol * best:
            stall = 0
        else:
            stall += 1
        if cur < best:
            best = cur
            best_params = [p.copy() for p in params]
        if stall >= patience:
            converged = True
            break
    if not converged:
        warnings.warn("autoencoder hit the epoch cap", NonconvergedFlag, stacklevel=2)
    params = best_params
    model = AutoencoderModel(tuple(params), mean, scale, C.shape[1], g)
    codes = forward(Z)[1]
    return model, EmbeddingResult(codes, "ae", best * k * scale ** 2, converged=converged,
                                  history=history)


# ---------------------------------------------------------------------------
# dispatcher


METHODS = ("pga", "cmds", "mmds", "tsne", "ae")


def embed(method, samples=None, d: int = 2, geometry="ecm", distances=None, **options) -> EmbeddingResult:
    """Run one embedding method; distance-based methods accept ``distances``."""
    method = str(method).lower()
    if method not in METHODS:
        raise DataError(f"unknown embedding method {method!r}")
    if method in ("pga", "ae"):
        if samples is None:
            raise DataError(f"{method} needs samples, not a distance matrix")
        fn = pga if method == "pga" else autoencoder
        return fn(samples, d, geometry, **options)[1]
    if distances is None:
        if samples is None:
            raise DataError("need samples or a distance matrix")
        distances = distance_matrix(samples, geometry=geometry)
    if method == "cmds":
        return cmds(distances, d)
    if method == "mmds":
        return smacof(distances, d, **options)
    return tsne(distances, d, **options)
