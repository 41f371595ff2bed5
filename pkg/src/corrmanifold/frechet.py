"""Fréchet mean, Fréchet (geometric) median and Fréchet variation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    AnchorOscillation,
    CollinearSample,
    DataError,
    DimensionMismatch,
    KarcherNotConverged,
    UnsupportedGeometry,
)
from .geometry import Geometry, airm_distance, distance, from_coords, to_coords
from .samples import as_stack

ANCHOR_TOL = 1e-12


@dataclass(frozen=True)
class CentroidResult:
    center: np.ndarray
    variation: float
    iterations: int
    converged: bool
    geometry: Geometry
    spd_center: bool = False
    collinear: bool = False


def pairwise_sum(x: np.ndarray) -> np.ndarray:
    """Tree summation along the first axis."""
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    if m == 0:
        return np.zeros(x.shape[1:])
    if m == 1:
        return x[0].copy()
    if m <= 8:
        out = x[0].copy()
        for k in range(1, m):
            out = out + x[k]
        return out
    h = m // 2
    return pairwise_sum(x[:h]) + pairwise_sum(x[h:])


def _check_geometry(geometry):
    g = Geometry.parse(geometry)
    if g is Geometry.QAM:
        raise UnsupportedGeometry("Fréchet centroids are not available under QAM")
    return g


# ---------------------------------------------------------------------------
# SPD helpers for the AIRM baseline


def _eig_fn(P, fn):
    w, U = np.linalg.eigh(P)
    return (U * fn(w)) @ U.T


def _sym(a):
    return 0.5 * (a + a.T)


def _airm_logs(X, C):
    """Whitened logarithms ``log(X^{-1/2} C_i X^{-1/2})`` and ``X^{+-1/2}``."""
    w, U = np.linalg.eigh(X)
    R = (U * np.sqrt(w)) @ U.T
    Ri = (U / np.sqrt(w)) @ U.T
    logs = np.stack([_eig_fn(_sym(Ri @ c @ Ri), np.log) for c in C])
    return logs, R


def _karcher_mean(C, tol=1e-8, max_iter=100):
    X = _sym(pairwise_sum(C) / len(C))
    for it in range(1, max_iter + 1):
        logs, R = _airm_logs(X, C)
        T = pairwise_sum(logs) / len(C)
        if np.linalg.norm(T) < tol:
            return X, it, True
        X = _sym(R @ _eig_fn(_sym(T), np.exp) @ R)
    return X, max_iter, False


def _airm_median(C, tol, max_iter):
    X, _, _ = _karcher_mean(C, tol=1e-6, max_iter=20)
    f_old = np.mean([airm_distance(X, c) for c in C])
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        logs, R = _airm_logs(X, C)
        d = np.sqrt(np.sum(logs ** 2, axis=(1, 2)))
        far = d > ANCHOR_TOL
        eta = int(np.sum(~far))
        w = 1.0 / d[far]
        grad = np.tensordot(w, logs[far], axes=1)
        step = grad / w.sum()
        if eta:
            r = np.linalg.norm(grad)
            if r <= eta:
                converged = True
                break
            step = step * (1.0 - eta / r)
        alpha = 1.0
        for _ in range(30):
            X_new = _sym(R @ _eig_fn(_sym(alpha * step), np.exp) @ R)
            f_new = np.mean([airm_distance(X_new, c) for c in C])
            if f_new <= f_old + 1e-15:
                break
            alpha *= 0.5
        delta = np.linalg.norm(X_new - X)
        X, f_old = X_new, f_new
        if delta < tol:
            converged = True
            break
    return X, it, converged


# ---------------------------------------------------------------------------
# Weiszfeld in flat coordinates


def weiszfeld(points: np.ndarray, tol: float = 1e-9, max_iter: int = 1000, start=None):
    """Geometric median of row vectors with the Vardi-Zhang anchor correction.

    Returns ``(median, iterations, converged, anchored)`` where ``anchored``
    reports that the run ended while sitting on a data point without the
    optimality test being met.
    """
    x = np.asarray(points, dtype=float)
    y = pairwise_sum(x) / len(x) if start is None else np.array(start, dtype=float)
    anchored = False
    for it in range(1, max_iter + 1):
        diff = x - y
        d = np.sqrt(np.sum(diff ** 2, axis=1))
        far = d > ANCHOR_TOL
        eta = int(np.sum(~far))
        anchored = eta > 0
        w = 1.0 / d[far]
        T = (w @ x[far]) / w.sum()
        if eta:
            R = w @ diff[far]
            r = np.linalg.norm(R)
            if r <= eta:
                return y, it, True, False
            lam = eta / r
            y_new = (1.0 - lam) * T + lam * y
        else:
            y_new = T
        if np.linalg.norm(y_new - y) < tol:
            return y_new, it, True, False
        y = y_new
    return y, max_iter, False, anchored


def _is_collinear(coords) -> bool:
    if len(coords) < 2:
        return False
    centered = coords - coords.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    return int(np.sum(s > 1e-10)) <= 1


# ---------------------------------------------------------------------------
# public API


def frechet_mean(samples, geometry="ecm") -> CentroidResult:
    """Fréchet mean under ECM/LEC (closed form) or AIRM (Karcher iteration)."""
    g = _check_geometry(geometry)
    C = as_stack(samples)
    m, n = C.shape[0], C.shape[1]
    if g.flat:
        coords = to_coords(C, g)
        mu = pairwise_sum(coords) / m
        var = float(np.mean(np.sum((coords - mu) ** 2, axis=1)))
        return CentroidResult(from_coords(mu, n, g), var, 1, True, g)
    X, it, ok = _karcher_mean(C)
    if not ok:
        warnings.warn("Karcher iteration hit the iteration cap", KarcherNotConverged, stacklevel=2)
    var = float(np.mean([airm_distance(X, c) ** 2 for c in C]))
    unit = bool(np.allclose(np.diag(X), 1.0, atol=1e-12))
    return CentroidResult(X, var, it, ok, g, spd_center=not unit)


def frechet_median(samples, geometry="ecm", max_iter: int = 1000, tol: float = 1e-9) -> CentroidResult:
    """Fréchet median (Weiszfeld on flat coordinates, Riemannian Weiszfeld for AIRM)."""
    g = _check_geometry(geometry)
    C = as_stack(samples)
    m, n = C.shape[0], C.shape[1]
    if m == 1:
        return CentroidResult(C[0].copy(), 0.0, 0, True, g)
    if g.flat:
        coords = to_coords(C, g)
        collinear = _is_collinear(coords)
        if collinear:
            warnings.warn("mapped samples are collinear; the median may not be unique",
                          CollinearSample, stacklevel=2)
        y, it, ok, anchored = weiszfeld(coords, tol=tol, max_iter=max_iter)
        if anchored:
            warnings.warn("Weiszfeld iterate kept returning to a data point",
                          AnchorOscillation, stacklevel=2)
        var = float(np.mean(np.sqrt(np.sum((coords - y) ** 2, axis=1))))
        return CentroidResult(from_coords(y, n, g), var, it, ok, g, collinear=collinear)
    X, it, ok = _airm_median(C, tol, max_iter)
    if not ok:
        warnings.warn("Riemannian Weiszfeld hit the iteration cap", KarcherNotConverged, stacklevel=2)
    var = float(np.mean([airm_distance(X, c) for c in C]))
    unit = bool(np.allclose(np.diag(X), 1.0, atol=1e-12))
    return CentroidResult(X, var, it, ok, g, spd_center=not unit)


def frechet_variation(samples, center, p: int = 2, geometry="ecm") -> float:
    """``(1/m) sum_i d(center, C_i) ** p`` for ``p`` in ``{1, 2}``."""
    if p not in (1, 2):
        raise DataError("p must be 1 or 2")
    g = Geometry.parse(geometry)
    C = as_stack(samples)
    center = np.asarray(center, dtype=float)
    if center.shape != C.shape[1:]:
        raise DimensionMismatch(f"center shape {center.shape} vs samples {C.shape[1:]}")
    if g.flat:
        d = np.sqrt(np.sum((to_coords(C, g) - to_coords(center, g)) ** 2, axis=1))
    else:
        d = np.array([distance(center, c, g) for c in C])
    return float(np.mean(d ** p))
