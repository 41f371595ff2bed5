"""Kernel regression of scalar labels on correlation matrices.

The squared-exponential kernel ``k(A, B) = exp(-theta * d(A, B)**2)`` is
positive definite under ECM and LEC because ``d**2`` is a conditionally
negative definite function of the flat coordinates. Three regressors sit on
top of it: Gaussian-process regression, Nadaraya-Watson kernel regression and
epsilon-insensitive support vector regression.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import cdist, pdist, squareform

from .errors import (
    DataError,
    DimensionMismatch,
    InsufficientData,
    NotConverged,
    NumericalUnderflow,
    SingularSystem,
)
from .geometry import Geometry, _require_flat, to_coords
from .samples import SampleSet, as_stack

DEFAULT_THETA_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


class Regressor(str, Enum):
    GP = "gp"
    KERN = "kern"
    SVR = "svr"

    @classmethod
    def parse(cls, value) -> "Regressor":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DataError(f"unknown regressor {value!r}") from None


@dataclass(frozen=True)
class KernelSpec:
    theta: float = 1.0
    geometry: Geometry = Geometry.ECM

    def __post_init__(self):
        object.__setattr__(self, "geometry", _require_flat(self.geometry))
        if not self.theta >= 0:
            raise DataError("kernel theta must be nonnegative")


def _coords(samples, geometry):
    return to_coords(as_stack(samples), geometry)


def gram(samples, spec: KernelSpec, other=None) -> np.ndarray:
    """Gram matrix ``exp(-theta * d**2)`` within ``samples`` or against ``other``."""
    X = _coords(samples, spec.geometry)
    if other is None:
        D2 = squareform(pdist(X, "sqeuclidean")) if len(X) > 1 else np.zeros((1, 1))
    else:
        Y = _coords(other, spec.geometry)
        if Y.shape[1] != X.shape[1]:
            raise DimensionMismatch("sample sets have different matrix dimensions")
        D2 = cdist(X, Y, "sqeuclidean")
    return np.exp(-spec.theta * D2)


# ---------------------------------------------------------------------------
# solvers on precomputed kernels


def _gp_solve(K, y, noise):
    m = len(y)
    if noise < 0:
        raise DataError("GP noise variance must be nonnegative")
    jitters = [0.0] if noise == 0 else [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6]
    for jit in jitters:
        try:
            cf = cho_factor(K + (noise + jit) * np.eye(m), lower=True)
        except np.linalg.LinAlgError:
            continue
        return cf, cho_solve(cf, y), jit
    raise SingularSystem("kernel system is singular; increase the noise variance")


def _svr_step(a, c, bi, bj, C, eps):
    """Exact minimizer over ``t`` of
    ``a t^2 / 2 + c t + eps (|bi + t| + |bj - t|)`` subject to the box."""
    lo = max(-C - bi, bj - C)
    hi = min(C - bi, bj + C)
    if hi <= lo:
        return 0.0
    knots = sorted({lo, hi, *(k for k in (-bi, bj) if lo < k < hi)})

    def phi(t):
        return 0.5 * a * t * t + c * t + eps * (abs(bi + t) + abs(bj - t))

    cands = list(knots)
    if a > 0:
        for left, right in zip(knots[:-1], knots[1:]):
            mid = 0.5 * (left + right)
            slope = eps * (math.copysign(1.0, bi + mid) - math.copysign(1.0, bj - mid))
            t = -(c + slope) / a
            if left < t < right:
                cands.append(t)
    best = min(cands, key=lambda t: (phi(t), abs(t)))
    return best if phi(best) < phi(0.0) else 0.0


def _svr_bounds(beta, g, C, eps):
    """Per-sample interval of admissible biases under the KKT conditions."""
    f = -g  # y - K beta
    at_hi = beta >= C
    at_lo = beta <= -C
    pos = beta > 0
    neg = beta < 0
    lo = np.where(pos | (beta == 0), f - eps, f + eps)
    hi = np.where(neg | (beta == 0), f + eps, f - eps)
    lo = np.where(at_hi, -np.inf, lo)
    hi = np.where(at_lo, np.inf, hi)
    return lo, hi


def _svr_dual(K, y, eps, C, tol=1e-6, max_iter=100_000):
    """Solve the epsilon-SVR dual by two-variable coordinate descent.

    Minimizes ``beta' K beta / 2 - y' beta + eps |beta|_1`` over
    ``|beta_i| <= C`` and ``sum(beta) = 0``. The working pair is the maximal
    KKT violator. Returns ``(beta, bias, iterations, gap)``.
    """
    m = len(y)
    beta = np.zeros(m)
    g = -np.asarray(y, dtype=float)
    diag = np.diag(K)
    gap = np.inf
    for it in range(1, max_iter + 1):
        lo, hi = _svr_bounds(beta, g, C, eps)
        i = int(np.argmax(lo))
        j = int(np.argmin(hi))
        gap = lo[i] - hi[j]
        if gap < tol:
            break
        a = diag[i] + diag[j] - 2.0 * K[i, j]
        t = _svr_step(max(a, 0.0), g[i] - g[j], beta[i], beta[j], C, eps)
        if t == 0.0:
            break
        beta[i] += t
        beta[j] -= t
        beta[i] = min(max(beta[i], -C), C)
        beta[j] = min(max(beta[j], -C), C)
        g += t * (K[:, i] - K[:, j])
    else:
        raise NotConverged(f"SVR dual did not reach KKT gap {tol:g} in {max_iter} iterations")
    lo, hi = _svr_bounds(beta, g, C, eps)
    free = (np.abs(beta) > 0) & (np.abs(beta) < C)
    if np.any(free):
        bias = float(np.mean(0.5 * (lo[free] + hi[free])))
    else:
        lo_max, hi_min = np.max(lo), np.min(hi)
        if np.isfinite(lo_max) and np.isfinite(hi_min):
            bias = 0.5 * (lo_max + hi_min)
        else:
            bias = float(lo_max if np.isfinite(lo_max) else hi_min)
    return beta, bias, it, max(gap, 0.0)


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class RegressorModel:
    kind: Regressor
    spec: KernelSpec
    coords: np.ndarray
    n: int
    y: np.ndarray
    params: dict = field(default_factory=dict)

    def _kstar(self, query):
        Q = np.asarray(query, dtype=float)
        single = Q.ndim == 2
        Q = Q[None] if single else Q
        if Q.shape[1:] != (self.n, self.n):
            raise DimensionMismatch(f"query dimension {Q.shape[1:]} vs training ({self.n}, {self.n})")
        qc = to_coords(Q, self.spec.geometry)
        return np.exp(-self.spec.theta * cdist(qc, self.coords, "sqeuclidean")), single

    def predict(self, query):
        raise NotImplementedError


@dataclass(frozen=True)
class GPModel(RegressorModel):
    alpha: np.ndarray = None
    offset: float = 0.0
    chol: tuple = None
    jitter: float = 0.0

    def predict(self, query, return_var: bool = False):
        """Posterior mean ``offset + k_*' alpha`` (and latent variance)."""
        ks, single = self._kstar(query)
        mean = self.offset + ks @ self.alpha
        if not return_var:
            return float(mean[0]) if single else mean
        v = cho_solve(self.chol, ks.T)
        var = np.maximum(1.0 - np.sum(ks.T * v, axis=0), 0.0)
        if single:
            return float(mean[0]), float(var[0])
        return mean, var


@dataclass(frozen=True)
class KernModel(RegressorModel):
    def weights(self, query) -> np.ndarray:
        ks, _ = self._kstar(query)
        tot = ks.sum(axis=1)
        if np.any(tot == 0):
            raise NumericalUnderflow("all kernel weights underflowed; theta is too large")
        return ks / tot[:, None]

    def predict(self, query):
        w = self.weights(query)
        out = w @ self.y
        return float(out[0]) if np.asarray(query).ndim == 2 else out


@dataclass(frozen=True)
class SVRModel(RegressorModel):
    beta: np.ndarray = None
    bias: float = 0.0
    iterations: int = 0
    kkt_gap: float = 0.0

    def predict(self, query):
        ks, single = self._kstar(query)
        out = ks @ self.beta + self.bias
        return float(out[0]) if single else out


def _check_labels(samples, labels):
    if labels is None:
        labels = samples.labels if isinstance(samples, SampleSet) else None
    if labels is None:
        raise DataError("regression needs labels")
    y = np.asarray(labels, dtype=float).reshape(-1)
    if not np.all(np.isfinite(y)):
        raise DataError("labels must be finite")
    return y


def _fit_from_kernel(kind, K, y, params):
    if kind is Regressor.GP:
        noise = float(params.get("noise", 1e-2))
        offset = float(np.mean(y)) if params.get("center", True) else 0.0
        cf, alpha, jit = _gp_solve(K, y - offset, noise)
        return dict(alpha=alpha, offset=offset, chol=cf, jitter=jit)
    if kind is Regressor.KERN:
        return {}
    eps = float(params.get("epsilon", 0.1))
    C = float(params.get("C", 1.0))
    if eps < 0 or C <= 0:
        raise DataError("SVR needs epsilon >= 0 and C > 0")
    beta, bias, it, gap = _svr_dual(K, y, eps, C, tol=params.get("tol", 1e-6),
                                    max_iter=params.get("max_iter", 100_000))
    return dict(beta=beta, bias=bias, iterations=it, kkt_gap=gap)


_MODEL = {Regressor.GP: GPModel, Regressor.KERN: KernModel, Regressor.SVR: SVRModel}


def fit(kind, samples, spec: KernelSpec | None = None, labels=None, **params) -> RegressorModel:
    """Fit a GP (``noise``), KERN, or SVR (``epsilon``, ``C``) model."""
    kind = Regressor.parse(kind)
    spec = spec or KernelSpec()
    y = _check_labels(samples, labels)
    X = as_stack(samples)
    if len(y) != len(X):
        raise DataError("labels length does not match sample count")
    if len(y) < (1 if kind is Regressor.KERN else 2):
        raise InsufficientData(f"too few training samples for {kind.value}")
    coords = to_coords(X, spec.geometry)
    K = np.exp(-spec.theta * squareform(pdist(coords, "sqeuclidean")))
    extra = _fit_from_kernel(kind, K, y, params)
    return _MODEL[kind](kind=kind, spec=spec, coords=coords, n=X.shape[1], y=y,
                        params=dict(params), **extra)


def predict(model: RegressorModel, query, **kw):
    return model.predict(query, **kw)


# ---------------------------------------------------------------------------
# cross-validation


def _predict_from_kernel(kind, Ktr, Kte, y, params):
    extra = _fit_from_kernel(kind, Ktr, y, params)
    if kind is Regressor.GP:
        return extra["offset"] + Kte @ extra["alpha"]
    if kind is Regressor.KERN:
        tot = Kte.sum(axis=1)
        if np.any(tot == 0):
            raise NumericalUnderflow("all kernel weights underflowed")
        return (Kte @ y) / tot
    return Kte @ extra["beta"] + extra["bias"]


def kfold_indices(m: int, folds: int, seed) -> list[np.ndarray]:
    perm = np.random.default_rng(seed).permutation(m)
    return [np.sort(f) for f in np.array_split(perm, folds)]


def default_param_grid(kind, y) -> list[dict]:
    kind = Regressor.parse(kind)
    var = float(np.var(y)) or 1.0
    sd = math.sqrt(var)
    if kind is Regressor.GP:
        return [{"noise": r * var} for r in (1e-3, 1e-2, 1e-1, 1.0)]
    if kind is Regressor.KERN:
        return [{}]
    return [{"epsilon": e * sd, "C": c * sd}
            for e, c in itertools.product((0.01, 0.1, 0.5), (1.0, 10.0, 100.0))]


@dataclass(frozen=True)
class TuneResult:
    spec: KernelSpec
    params: dict
    cv_mse: float
    table: list


def tune(kind, samples, theta_grid=DEFAULT_THETA_GRID, param_grid=None, folds: int = 5,
         seed=0, geometry="ecm", labels=None) -> TuneResult:
    """Grid search by k-fold cross-validated mean squared error.

    Candidates are visited in ascending ``theta`` and then ascending
    parameter values; only a strictly smaller CV error replaces the incumbent,
    so ties go to the smaller setting. Candidates whose fit fails numerically
    score ``inf``.
    """
    kind = Regressor.parse(kind)
    g = _require_flat(geometry)
    y = _check_labels(samples, labels)
    X = as_stack(samples)
    m = len(y)
    if folds < 2 or m < folds:
        raise InsufficientData(f"need folds >= 2 and at least {folds} samples")
    grid = param_grid if param_grid is not None else default_param_grid(kind, y)
    grid = sorted(grid, key=lambda d: tuple(d[k] for k in sorted(d)))
    D2 = squareform(pdist(to_coords(X, g), "sqeuclidean"))
    splits = kfold_indices(m, folds, seed)
    best = None
    table = []
    for th in sorted(theta_grid):
        K = np.exp(-th * D2)
        for params in grid:
            errs = []
            try:
                for test in splits:
                    train = np.setdiff1d(np.arange(m), test)
                    pred = _predict_from_kernel(kind, K[np.ix_(train, train)],
                                                K[np.ix_(test, train)], y[train], params)
                    errs.append(np.mean((pred - y[test]) ** 2))
                mse = float(np.mean(errs))
            except (NotConverged, SingularSystem, NumericalUnderflow):
                mse = math.inf
            table.append({"theta": th, **params, "cv_mse": mse})
            if best is None or mse < best[2]:
                best = (th, params, mse)
    return TuneResult(KernelSpec(best[0], g), dict(best[1]), best[2], table)
