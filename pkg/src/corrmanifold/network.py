"""Connectome utilities: 1-NN fingerprinting and top-q binarization."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, IdMismatch, TieWarning
from .geometry import Geometry, distance_matrix
from .samples import SampleSet

BASELINES = ("pearson", "euclidean")


@dataclass(frozen=True)
class FingerprintResult:
    accuracy: float
    method: str
    table: list
    ties: int

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "method": self.method, "ties": self.ties,
                "matches": self.table}


def _upper(C):
    n = C.shape[-1]
    r, c = np.triu_indices(n, 1)
    return C[:, r, c]


def dissimilarity(test, train, method="ecm", workers: int = 1) -> np.ndarray:
    """Test-by-train dissimilarity under a geometry or a baseline.

    ``"pearson"`` is one minus the Pearson correlation of the upper-triangle
    vectors; ``"euclidean"`` is the Frobenius distance.
    """
    A = test.items if isinstance(test, SampleSet) else np.asarray(test, dtype=float)
    B = train.items if isinstance(train, SampleSet) else np.asarray(train, dtype=float)
    key = str(getattr(method, "value", method)).lower()
    if key == "pearson":
        u, v = _upper(A), _upper(B)
        u = u - u.mean(axis=1, keepdims=True)
        v = v - v.mean(axis=1, keepdims=True)
        nu = np.linalg.norm(u, axis=1)[:, None]
        nv = np.linalg.norm(v, axis=1)[None, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            r = (u @ v.T) / (nu * nv)
        return 1.0 - np.nan_to_num(r, nan=0.0)
    if key == "euclidean":
        diff = A.reshape(len(A), -1)[:, None, :] - B.reshape(len(B), -1)[None, :, :]
        return np.sqrt(np.sum(diff ** 2, axis=2))
    return distance_matrix(A, B, geometry=Geometry.parse(key), workers=workers)


def fingerprint(train: SampleSet, test: SampleSet, method="ecm", workers: int = 1) -> FingerprintResult:
    """Identify each test subject by its nearest train item.

    Both sets must carry the same id set. Ties at the minimum go to the
    lowest train index and are counted (and warned about).
    """
    if train.ids is None or test.ids is None:
        raise IdMismatch("fingerprinting needs ids on both sets")
    if set(train.ids) != set(test.ids):
        raise IdMismatch("train and test id sets differ")
    if train.n != test.n:
        raise DataError("train and test matrices differ in dimension")
    D = dissimilarity(test, train, method, workers)
    table = []
    ties = 0
    for i, row in enumerate(D):
        j = int(np.argmin(row))
        tie = bool(np.sum(row == row[j]) > 1)
        ties += tie
        table.append({"test_id": test.ids[i], "matched_id": train.ids[j],
                      "correct": test.ids[i] == train.ids[j], "distance": float(row[j]),
                      "tie": tie})
    if ties:
        warnings.warn(f"{ties} nearest-neighbour ties broken by train order", TieWarning,
                      stacklevel=2)
    acc = sum(r["correct"] for r in table) / len(table)
    return FingerprintResult(acc, str(getattr(method, "value", method)).lower(), table, ties)


def edge_count(q: float, n: int) -> int:
    """``ceil(q * n(n-1)/2)`` with a guard against products like 9.000000000000002."""
    total = n * (n - 1) // 2
    return min(total, math.ceil(round(q * total, 9)))


def binarize_top_q(C, q: float) -> np.ndarray:
    """Keep the top ``q`` fraction of edges by ``|r|`` as a symmetric 0/1 matrix.

    Edges are ranked by magnitude, ties by upper-triangle index order (and
    warned about when they straddle the cut). Edges with ``r == 0`` carry no
    connection and are never kept, so the identity maps to all zeros.
    """
    if not 0 < q < 1:
        raise DataError("q must lie in (0, 1)")
    C = np.asarray(C, dtype=float)
    n = C.shape[0]
    r, c = np.triu_indices(n, 1)
    mag = np.abs(C[r, c])
    k = edge_count(q, n)
    order = np.argsort(-mag, kind="stable")
    keep = order[:k]
    keep = keep[mag[keep] > 0]
    if 0 < k < len(order) and mag[order[k - 1]] > 0 and mag[order[k - 1]] == mag[order[k]]:
        warnings.warn("edges tied at the threshold were split by index order", TieWarning,
                      stacklevel=2)
    B = np.zeros((n, n))
    B[r[keep], c[keep]] = 1.0
    return B + B.T
