"""Synthetic correlation samples from normalized Wishart draws."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .errors import DataError
from .estimators import cov_to_corr
from .samples import SampleSet


class Generator(str, Enum):
    WISHART_IDENTITY = "wishart-identity"
    WISHART_AR1 = "wishart-ar1"
    MIXTURE = "mixture"

    @classmethod
    def parse(cls, value) -> "Generator":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "-")
        try:
            return cls(key)
        except ValueError:
            raise DataError(f"unknown generator {value!r}") from None


def ar1_matrix(p: int, rho: float) -> np.ndarray:
    """``V[i, j] = rho ** |i - j|``."""
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def wishart(scale, dof: float, size: int = 1, rng=None) -> np.ndarray:
    """Draw ``size`` Wishart(scale, dof) matrices by Bartlett decomposition.

    ``W = (L A)(L A)^T`` with ``L = chol(scale)``, ``A`` lower triangular,
    ``A[i, i] = sqrt(chi2(dof - i))`` and standard normal entries below the
    diagonal. Returns an array of shape ``(size, p, p)``.
    """
    rng = np.random.default_rng(rng)
    scale = np.asarray(scale, dtype=float)
    p = scale.shape[0]
    if dof < p:
        raise DataError(f"degrees of freedom {dof} < dimension {p} gives rank-deficient draws")
    L = np.linalg.cholesky(scale)
    out = np.empty((size, p, p))
    r, c = np.tril_indices(p, -1)
    df = dof - np.arange(p)
    for s in range(size):
        A = np.zeros((p, p))
        A[r, c] = rng.standard_normal(r.size)
        A[np.arange(p), np.arange(p)] = np.sqrt(rng.chisquare(df))
        LA = L @ A
        W = LA @ LA.T
        out[s] = 0.5 * (W + W.T)
    return out


def normalized_wishart(scale, dof: float, size: int = 1, rng=None) -> np.ndarray:
    return cov_to_corr(wishart(scale, dof, size, rng))


@dataclass(frozen=True)
class SimulationSpec:
    generator: Generator = Generator.WISHART_IDENTITY
    p: int = 10
    count: int = 100
    dof: float | None = None
    rho: float = 0.9
    contamination: int = 0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "generator", Generator.parse(self.generator))
        if self.dof is None:
            object.__setattr__(self, "dof", 2 * self.p)
        if self.p < 1 or self.count < 1:
            raise DataError("p and count must be positive")
        if self.dof < self.p:
            raise DataError("degrees of freedom must be >= p")
        if not 0 < self.rho < 1:
            raise DataError("rho must lie in (0, 1)")
        if not 0 <= self.contamination <= self.count:
            raise DataError("contamination must lie in [0, count]")

    def params(self) -> dict:
        d = asdict(self)
        d["generator"] = self.generator.value
        return d


def simulate(spec: SimulationSpec) -> SampleSet:
    """Generate a sample set.

    ``MIXTURE`` draws ``count - contamination`` identity-scale samples
    followed by ``contamination`` AR(1)-scale samples from one stream, so
    ``contamination = 0`` reproduces the identity generator exactly. Groups
    flag each sample as ``"signal"`` (identity scale) or ``"noise"``.
    """
    rng = np.random.default_rng(spec.seed)
    p, m = spec.p, spec.count
    eye = np.eye(p)
    if spec.generator is Generator.WISHART_IDENTITY:
        items = normalized_wishart(eye, spec.dof, m, rng)
        groups = ("signal",) * m
    elif spec.generator is Generator.WISHART_AR1:
        items = normalized_wishart(ar1_matrix(p, spec.rho), spec.dof, m, rng)
        groups = ("noise",) * m
    else:
        k = spec.contamination
        sig = normalized_wishart(eye, spec.dof, m - k, rng) if m - k else np.empty((0, p, p))
        noi = normalized_wishart(ar1_matrix(p, spec.rho), spec.dof, k, rng) if k else np.empty((0, p, p))
        items = np.concatenate([sig, noi])
        groups = ("signal",) * (m - k) + ("noise",) * k
    ids = tuple(f"s{i:04d}" for i in range(m))
    return SampleSet(items, ids=ids, groups=groups, metadata={"simulation": spec.params()})


def random_correlation(n: int, rng=None, dof: float | None = None) -> np.ndarray:
    """A random full-rank correlation matrix (normalized Wishart, random scale)."""
    rng = np.random.default_rng(rng)
    g = rng.standard_normal((n, n))
    scale = g @ g.T / n + np.eye(n)
    return normalized_wishart(scale, dof or 2 * n, 1, rng)[0]


def perturbed(V, rng=None, strength: float = 0.1) -> np.ndarray:
    """``cov_to_corr(V + strength * G G^T / n)`` for a standard normal ``G``."""
    rng = np.random.default_rng(rng)
    n = V.shape[0]
    g = rng.standard_normal((n, n))
    return cov_to_corr(V + strength * g @ g.T / n)
