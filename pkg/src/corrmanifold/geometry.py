"""Correlation-manifold geometry.

Validated correlation matrices, the normalized-Cholesky map ``theta`` and its
logarithmic variant, and distances/geodesics under the Euclidean-Cholesky
(ECM), Log-Euclidean-Cholesky (LEC), affine-invariant (AIRM) and
quotient-affine (QAM) geometries.

ECM and LEC are flat: every correlation matrix is sent to a vector of
``n(n-1)/2`` strictly-lower-triangular entries and distances become plain
Euclidean distances between those vectors. Most of the learning code in this
package works directly on these coordinates (see :func:`to_coords`).
"""

from __future__ import annotations

import functools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .errors import (
    CholeskyFailure,
    DataError,
    DimensionMismatch,
    NotPositiveDefinite,
    NotSymmetric,
    NotUnitDiagonal,
    QamNotConverged,
    UnsupportedGeometry,
)

TOL_PD = 1e-10
TOL_DIAG = 1e-12
TOL_SYM = 1e-8


class Geometry(str, Enum):
    ECM = "ecm"
    LEC = "lec"
    AIRM = "airm"
    QAM = "qam"

    @classmethod
    def parse(cls, value) -> "Geometry":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise UnsupportedGeometry(f"unknown geometry {value!r}") from None

    @property
    def flat(self) -> bool:
        return self in (Geometry.ECM, Geometry.LEC)


FLAT_GEOMETRIES = (Geometry.ECM, Geometry.LEC)


@dataclass(frozen=True)
class QamOptions:
    """Solver settings for the QAM distance.

    ``solver="gd"`` is plain steepest descent with Armijo backtracking (the
    trial step doubles the last accepted one). ``solver="bb"`` uses
    Barzilai-Borwein trial steps with a nonmonotone Armijo test and usually
    converges in a few dozen iterations.
    """

    max_iterations: int = 200
    gradient_tolerance: float = 1e-8
    max_dim: int = 100
    solver: str = "gd"

    def __post_init__(self):
        if self.max_iterations <= 0 or self.gradient_tolerance <= 0 or self.max_dim <= 0:
            raise DataError("QAM options must be positive")
        if self.solver not in ("gd", "bb"):
            raise DataError(f"unknown QAM solver {self.solver!r}")


def _require_flat(geometry) -> Geometry:
    g = Geometry.parse(geometry)
    if not g.flat:
        raise UnsupportedGeometry(f"{g.value} is not supported here; use ecm or lec")
    return g


# ---------------------------------------------------------------------------
# validation


def validate_correlation(entries, tol_pd=TOL_PD, tol_diag=TOL_DIAG) -> np.ndarray:
    """Return a validated copy of a correlation matrix.

    The input is symmetrized as ``(A + A.T) / 2`` and its diagonal snapped to
    exactly one when it lies within ``tol_diag``.

    Raises
    ------
    NotSymmetric
        Asymmetry above 1e-8.
    NotUnitDiagonal
        Some diagonal entry differs from 1 by more than ``tol_diag``.
    NotPositiveDefinite
        Smallest eigenvalue at or below ``tol_pd``.
    """
    a = np.array(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    if np.max(np.abs(a - a.T)) > TOL_SYM:
        raise NotSymmetric("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    dev = np.max(np.abs(np.diag(a) - 1.0))
    if dev > tol_diag:
        raise NotUnitDiagonal(f"diagonal deviates from 1 by {dev:.3g}")
    np.fill_diagonal(a, 1.0)
    lam = np.linalg.eigvalsh(a)[0]
    if lam <= tol_pd:
        raise NotPositiveDefinite(f"smallest eigenvalue {lam:.3g} <= {tol_pd:g}")
    return a


def validate_spd(entries, tol_pd=TOL_PD) -> np.ndarray:
    a = np.array(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if np.max(np.abs(a - a.T)) > TOL_SYM:
        raise NotSymmetric("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    lam = np.linalg.eigvalsh(a)[0]
    if lam <= tol_pd:
        raise NotPositiveDefinite(f"smallest eigenvalue {lam:.3g} <= {tol_pd:g}")
    return a


def is_correlation(entries, tol_pd=TOL_PD, tol_diag=TOL_DIAG) -> bool:
    try:
        validate_correlation(entries, tol_pd, tol_diag)
    except DataError:
        return False
    return True


# ---------------------------------------------------------------------------
# diffeomorphisms


def theta(C) -> np.ndarray:
    """Row-normalized Cholesky factor of ``C`` (unit-diagonal lower triangular).

    Works on a single ``(n, n)`` matrix or a stack ``(..., n, n)``.
    """
    C = np.asarray(C, dtype=float)
    try:
        L = np.linalg.cholesky(C)
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure("Cholesky factorization failed; matrix is not "
                              "numerically positive definite") from exc
    d = np.diagonal(L, axis1=-2, axis2=-1)
    if np.any(d <= 0) or not np.all(np.isfinite(L)):
        raise CholeskyFailure("Cholesky factor has a vanishing diagonal")
    Z = L / d[..., :, None]
    n = C.shape[-1]
    idx = np.arange(n)
    Z[..., idx, idx] = 1.0
    return Z


def theta_inv(L) -> np.ndarray:
    """Map a unit-diagonal lower-triangular matrix back to a correlation."""
    L = np.asarray(L, dtype=float)
    S = L @ np.swapaxes(L, -1, -2)
    s = np.sqrt(np.diagonal(S, axis1=-2, axis2=-1))
    C = S / (s[..., :, None] * s[..., None, :])
    C = 0.5 * (C + np.swapaxes(C, -1, -2))
    n = L.shape[-1]
    idx = np.arange(n)
    C[..., idx, idx] = 1.0
    return C


def _nilpotent_poly(N, coef):
    """Evaluate ``sum_k coef[k] N^k`` for strictly lower-triangular ``N``.

    Paterson-Stockmeyer grouping with block size ``~sqrt(deg)``; the powers
    list is cut short once a power is exactly zero.
    """
    n = N.shape[-1]
    deg = len(coef) - 1
    eye = np.broadcast_to(np.eye(n), N.shape)
    if deg <= 0:
        return coef[0] * np.array(eye) if deg == 0 else np.zeros_like(N)
    s = max(1, math.isqrt(deg))
    powers = [eye, N]
    for _ in range(2, s + 1):
        nxt = powers[-1] @ N
        powers.append(nxt)
        if not nxt.any():
            break
    if not powers[-1].any():
        # N^j == 0 for j = len(powers) - 1: direct sum over the nonzero powers
        deg = min(deg, len(powers) - 2)
        out = np.zeros_like(N)
        for k in range(deg + 1):
            if coef[k] != 0.0:
                out = out + coef[k] * powers[k]
        return out
    Ns = powers[s]
    nblocks = deg // s + 1
    out = None
    for b in reversed(range(nblocks)):
        blk = np.zeros_like(N)
        for j in range(s):
            k = b * s + j
            if k <= deg and coef[k] != 0.0:
                blk += coef[k] * powers[j]
        out = blk if out is None else out @ Ns + blk
    return out


def log_unit_lower(Z) -> np.ndarray:
    """Matrix logarithm of a unit lower-triangular matrix (finite series)."""
    Z = np.asarray(Z, dtype=float)
    n = Z.shape[-1]
    N = np.tril(Z, -1)
    coef = [0.0] + [(-1.0) ** (k - 1) / k for k in range(1, n)]
    return np.tril(_nilpotent_poly(N, coef), -1)


def exp_strict_lower(S) -> np.ndarray:
    """Matrix exponential of a strictly lower-triangular matrix."""
    S = np.asarray(S, dtype=float)
    n = S.shape[-1]
    S = np.tril(S, -1)
    coef = [1.0]
    for k in range(1, n):
        coef.append(coef[-1] / k)
    E = np.tril(_nilpotent_poly(S, coef), -1)
    idx = np.arange(n)
    E[..., idx, idx] = 1.0
    return E


def log_theta(C) -> np.ndarray:
    return log_unit_lower(theta(C))


def log_theta_inv(S) -> np.ndarray:
    return theta_inv(exp_strict_lower(S))


# ---------------------------------------------------------------------------
# flat coordinates


@functools.lru_cache(maxsize=64)
def _lower_index(n: int):
    r, c = np.tril_indices(n, -1)
    r.setflags(write=False)
    c.setflags(write=False)
    return r, c


def coord_dim(n: int) -> int:
    return n * (n - 1) // 2


def dim_from_coord(k: int) -> int:
    n = int(round((1 + math.sqrt(1 + 8 * k)) / 2))
    if coord_dim(n) != k:
        raise DimensionMismatch(f"{k} is not a triangular coordinate length")
    return n


def to_coords(C, geometry="ecm") -> np.ndarray:
    """Strictly-lower entries of ``theta(C)`` (ECM) or ``log theta(C)`` (LEC).

    A stack ``(m, n, n)`` gives an ``(m, n(n-1)/2)`` array. The Frobenius
    distance between mapped matrices equals the Euclidean distance between
    these vectors because the mapped diagonals are constant.
    """
    g = _require_flat(geometry)
    C = np.asarray(C, dtype=float)
    Z = theta(C)
    if g is Geometry.LEC:
        Z = log_unit_lower(Z)
    r, c = _lower_index(C.shape[-1])
    return np.ascontiguousarray(Z[..., r, c])


def coords_to_lower(v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (n, n))
    r, c = np.tril_indices(n, -1)
    out[..., r, c] = v
    return out


def from_coords(v, n: int | None = None, geometry="ecm") -> np.ndarray:
    """Inverse of :func:`to_coords`; always yields a valid correlation."""
    g = _require_flat(geometry)
    v = np.asarray(v, dtype=float)
    if n is None:
        n = dim_from_coord(v.shape[-1])
    S = coords_to_lower(v, n)
    if g is Geometry.LEC:
        return log_theta_inv(S)
    idx = np.arange(n)
    S[..., idx, idx] = 1.0
    return theta_inv(S)


# ---------------------------------------------------------------------------
# distances


def _check_pair(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"incompatible shapes {A.shape} and {B.shape}")
    return A, B


def _canonical_order(A, B):
    # fixes the argument order so that d(A, B) and d(B, A) are bit-identical
    if A.tobytes() <= B.tobytes():
        return A, B
    return B, A


def _inv_sqrt(P):
    w, U = np.linalg.eigh(P)
    return (U / np.sqrt(w)) @ U.T


def airm_distance(A, B) -> float:
    r"""Affine-invariant distance :math:`\|\log(A^{-1}B)\|_F` between SPD matrices."""
    A, B = _check_pair(A, B)
    A, B = _canonical_order(A, B)
    R = _inv_sqrt(A)
    w = np.linalg.eigvalsh(R @ B @ R)
    if w[0] <= 0:
        raise NotPositiveDefinite("AIRM distance needs positive-definite inputs")
    return float(np.sqrt(np.sum(np.log(w) ** 2)))


@dataclass(frozen=True)
class QamResult:
    distance: float
    scaling: np.ndarray
    iterations: int
    gradient_norm: float
    converged: bool


def _qam_objective(R, B, t):
    """Squared AIRM distance between ``A`` and ``D B D`` and its gradient in
    ``t = log diag(D)``; ``R = A^{-1/2}``."""
    e = np.exp(t)
    X = B * np.outer(e, e)
    M = R @ X @ R
    w, U = np.linalg.eigh(0.5 * (M + M.T))
    if w[0] <= 0:
        return np.inf, None
    lw = np.log(w)
    f = float(np.sum(lw ** 2))
    W = R @ (U * (lw / w)) @ U.T @ R
    grad = 4.0 * np.sum(W * X, axis=1)
    return f, grad


def qam_distance(A, B, options: QamOptions | None = None) -> QamResult:
    """QAM distance: AIRM distance minimized over positive diagonal congruence.

    Gradient descent on ``t = log diag(D)`` from ``t = 0`` with backtracking
    line search (step rules in :class:`QamOptions`) and the analytic
    gradient. When the gradient norm is still above tolerance after
    ``max_iterations`` the best value is returned and
    :class:`~corrmanifold.errors.QamNotConverged` is warned.
    """
    opts = options or QamOptions()
    A, B = _check_pair(A, B)
    n = A.shape[0]
    if n > opts.max_dim:
        raise DataError(f"QAM distance capped at n <= {opts.max_dim} (got {n})")
    A, B = _canonical_order(A, B)
    R = _inv_sqrt(A)
    t = np.zeros(n)
    f, g = _qam_objective(R, B, t)
    best_f, best_t, best_g = f, t, g
    recent = [f]
    window = 10 if opts.solver == "bb" else 1
    step = 0.1 if opts.solver == "bb" else 1.0
    gnorm = float(np.linalg.norm(g))
    it = 0
    while it < opts.max_iterations and gnorm >= opts.gradient_tolerance:
        it += 1
        alpha = step
        gg = gnorm ** 2
        ref = max(recent[-window:])
        while True:
            t_new = t - alpha * g
            f_new, g_new = _qam_objective(R, B, t_new)
            if f_new <= ref - 1e-4 * alpha * gg:
                break
            alpha *= 0.5
            if alpha < 1e-20:
                break
        if alpha < 1e-20:
            # no acceptable step at working precision
            break
        if opts.solver == "bb":
            s = t_new - t
            y = g_new - g
            sy = float(s @ y)
            step = float(s @ s) / sy if sy > 0 else 2.0 * alpha
        else:
            step = 2.0 * alpha
        t, f, g = t_new, f_new, g_new
        recent.append(f)
        gnorm = float(np.linalg.norm(g))
        if f < best_f or gnorm < opts.gradient_tolerance:
            best_f, best_t, best_g = f, t, g
    f, t = best_f, best_t
    gnorm = float(np.linalg.norm(best_g))
    converged = gnorm < opts.gradient_tolerance
    if not converged:
        warnings.warn(f"QAM descent stopped with gradient norm {gnorm:.3g} after "
                      f"{it} iterations", QamNotConverged, stacklevel=2)
    return QamResult(math.sqrt(max(f, 0.0)), np.exp(t), it, gnorm, converged)


def distance(A, B, geometry="ecm", qam: QamOptions | None = None) -> float:
    """Geodesic distance between two correlation matrices."""
    g = Geometry.parse(geometry)
    A, B = _check_pair(A, B)
    if g.flat:
        a, b = to_coords(np.stack([A, B]), g)
        return float(np.linalg.norm(a - b))
    if g is Geometry.AIRM:
        return airm_distance(A, B)
    return qam_distance(A, B, qam).distance


def geodesic(A, B, t, geometry="ecm") -> np.ndarray:
    """Point at time ``t`` on the ECM/LEC geodesic from ``A`` to ``B``.

    ``t`` outside ``[0, 1]`` extrapolates along the same straight line in
    coordinates; the result is still a valid correlation matrix.
    """
    g = Geometry.parse(geometry)
    if not g.flat:
        raise UnsupportedGeometry(f"geodesics are only available for ecm/lec, not {g.value}")
    A, B = _check_pair(A, B)
    a = to_coords(A, g)
    b = to_coords(B, g)
    return from_coords((1.0 - t) * a + t * b, A.shape[0], g)


# ---------------------------------------------------------------------------
# distance matrices


def _as_stack(X):
    from .samples import SampleSet  # local import: samples depends on geometry

    if isinstance(X, SampleSet):
        return X.items
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1] != X.shape[2]:
        raise DimensionMismatch(f"expected a stack of square matrices, got {X.shape}")
    return X


def _pairwise_loop(X, Y, fn, workers, symmetric):
    mx, my = len(X), len(Y)
    if symmetric:
        pairs = [(i, j) for i in range(mx) for j in range(i + 1, mx)]
    else:
        pairs = [(i, j) for i in range(mx) for j in range(my)]
    D = np.zeros((mx, my))

    def work(p):
        return fn(X[p[0]], Y[p[1]])

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            vals = list(ex.map(work, pairs))
    else:
        vals = [work(p) for p in pairs]
    for (i, j), v in zip(pairs, vals):
        D[i, j] = v
        if symmetric:
            D[j, i] = v
    return D


def distance_matrix(X, Y=None, geometry="ecm", *, squared=False, workers=1,
                    qam: QamOptions | None = None) -> np.ndarray:
    """Pairwise distances within ``X`` or between ``X`` and ``Y``.

    The within-sample matrix is exactly symmetric with a zero diagonal.
    """
    g = Geometry.parse(geometry)
    X = _as_stack(X)
    Ys = None if Y is None else _as_stack(Y)
    if Ys is not None and Ys.shape[1:] != X.shape[1:]:
        raise DimensionMismatch("sample sets have different matrix dimensions")
    if g.flat:
        metric = "sqeuclidean" if squared else "euclidean"
        cx = to_coords(X, g)
        if Ys is None:
            return squareform(pdist(cx, metric)) if len(cx) > 1 else np.zeros((1, 1))
        return cdist(cx, to_coords(Ys, g), metric)
    if g is Geometry.AIRM:
        fn = airm_distance
    else:
        def fn(a, b):
            return qam_distance(a, b, qam).distance
    D = _pairwise_loop(X, X if Ys is None else Ys, fn, workers, Ys is None)
    return D ** 2 if squared else D
