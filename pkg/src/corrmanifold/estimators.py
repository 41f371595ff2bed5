"""Covariance and correlation estimation from multivariate time series.

Columns are channels/ROIs and rows are time points. Columns are mean-centered
and the sample covariance uses divisor ``T - 1``. Shrinkage estimators
(Ledoit-Wolf, OAS) shrink toward ``(tr(S) / n) I`` with the published
intensity formulas clamped to ``[0, 1]``; ridge adds ``tau * I``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DataError, DegenerateInput, NotPositiveDefinite, SingularResult
from .geometry import TOL_PD, validate_correlation


class Estimator(str, Enum):
    SCM = "scm"
    LW = "lw"
    OAS = "oas"
    RIDGE = "ridge"

    @classmethod
    def parse(cls, value) -> "Estimator":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DataError(f"unknown estimator {value!r}") from None


@dataclass(frozen=True)
class CovarianceEstimate:
    matrix: np.ndarray
    kind: Estimator
    shrinkage: float
    full_rank: bool


def validate_timeseries(x) -> np.ndarray:
    x = np.array(x, dtype=float)
    if x.ndim != 2:
        raise DegenerateInput(f"time series must be 2-D (T x n), got shape {x.shape}")
    if x.shape[0] < 2:
        raise DegenerateInput("need at least two time points")
    if not np.all(np.isfinite(x)):
        raise DegenerateInput("time series contains non-finite values")
    if np.any(np.ptp(x, axis=0) == 0):
        bad = np.flatnonzero(np.ptp(x, axis=0) == 0).tolist()
        raise DegenerateInput(f"constant column(s) {bad}")
    return x


def ledoit_wolf_shrinkage(xc: np.ndarray) -> float:
    """Ledoit-Wolf (2004) intensity for centered data ``xc`` (T x n)."""
    T, n = xc.shape
    S = xc.T @ xc / T
    mu = np.trace(S) / n
    delta2 = (np.sum(S ** 2) - 2 * mu * np.trace(S) + n * mu ** 2) / n
    if delta2 <= 0:
        return 0.0
    row_sq = np.sum(xc ** 2, axis=1)
    beta_bar2 = (np.sum(row_sq ** 2) / T ** 2 - np.sum(S ** 2) / T) / n
    beta2 = min(max(beta_bar2, 0.0), delta2)
    return float(np.clip(beta2 / delta2, 0.0, 1.0))


def oas_shrinkage(xc: np.ndarray) -> float:
    """Oracle-approximating shrinkage intensity (Chen et al. 2010)."""
    T, n = xc.shape
    S = xc.T @ xc / T
    tr = np.trace(S)
    tr2 = np.sum(S ** 2)
    num = (1.0 - 2.0 / n) * tr2 + tr ** 2
    den = (T + 1.0 - 2.0 / n) * (tr2 - tr ** 2 / n)
    if den <= 0:
        return 1.0
    return float(np.clip(num / den, 0.0, 1.0))


def _corr_lambda_min(S):
    d = np.sqrt(np.diag(S))
    return np.linalg.eigvalsh(S / np.outer(d, d))[0]


def estimate_covariance(x, kind="oas", tau: float = 1.0, allow_singular=False) -> CovarianceEstimate:
    """Estimate a covariance matrix from a ``T x n`` time series.

    SCM estimates whose normalized form has smallest eigenvalue at or below
    ``TOL_PD`` raise :class:`SingularResult` unless ``allow_singular``.
    """
    kind = Estimator.parse(kind)
    x = validate_timeseries(x)
    T, n = x.shape
    xc = x - x.mean(axis=0)
    S = xc.T @ xc / (T - 1)
    S = 0.5 * (S + S.T)
    shrink = 0.0
    if kind is Estimator.SCM:
        full = bool(_corr_lambda_min(S) > TOL_PD)
        if not full and not allow_singular:
            raise SingularResult(
                f"sample covariance is rank deficient (T={T}, n={n}); use a shrinkage estimator")
        return CovarianceEstimate(S, kind, 0.0, full)
    if kind is Estimator.RIDGE:
        if not tau > 0:
            raise DataError("ridge tau must be positive")
        out = S + tau * np.eye(n)
    else:
        shrink = ledoit_wolf_shrinkage(xc) if kind is Estimator.LW else oas_shrinkage(xc)
        mu = np.trace(S) / n
        out = (1.0 - shrink) * S + shrink * mu * np.eye(n)
    return CovarianceEstimate(out, kind, shrink, True)


def cov_to_corr(S) -> np.ndarray:
    """``D^{-1/2} S D^{-1/2}`` with ``D = Diag(S)``; exact unit diagonal."""
    S = np.asarray(S, dtype=float)
    d = np.diagonal(S, axis1=-2, axis2=-1)
    if np.any(d <= 0):
        raise NotPositiveDefinite("covariance has a non-positive diagonal entry")
    s = np.sqrt(d)
    C = S / (s[..., :, None] * s[..., None, :])
    C = 0.5 * (C + np.swapaxes(C, -1, -2))
    idx = np.arange(S.shape[-1])
    C[..., idx, idx] = 1.0
    return C


def estimate_correlation(x, kind="oas", tau: float = 1.0) -> np.ndarray:
    est = estimate_covariance(x, kind, tau)
    return validate_correlation(cov_to_corr(est.matrix))


def first_pc_reduce(x, blocks) -> tuple[np.ndarray, list]:
    """Summarize each block of columns by its first principal component.

    ``blocks`` assigns a block label to every column. Returns the ``T x B``
    reduced series (blocks in first-appearance order) and the block labels.
    Each component's sign is chosen to correlate positively with the block
    mean.
    """
    x = validate_timeseries(x)
    blocks = list(blocks)
    if len(blocks) != x.shape[1]:
        raise DataError("one block label per column is required")
    order = list(dict.fromkeys(blocks))
    lab = np.asarray(blocks, dtype=object)
    out = np.empty((x.shape[0], len(order)))
    for b, key in enumerate(order):
        xb = x[:, lab == key]
        xb = xb - xb.mean(axis=0)
        if xb.shape[1] == 1:
            out[:, b] = xb[:, 0]
            continue
        u, s, vt = np.linalg.svd(xb, full_matrices=False)
        pc = u[:, 0] * s[0]
        if pc @ xb.mean(axis=1) < 0:
            pc = -pc
        out[:, b] = pc
    return out, order
