"""Wall-clock timing of single distance evaluations."""

from __future__ import annotations

import csv
import time
from pathlib import Path

import numpy as np

from .errors import DataError
from .geometry import Geometry, QamOptions, distance
from .simulate import ar1_matrix, perturbed

COLUMNS = ("n", "geometry", "trials", "mean_seconds", "std_seconds")


def benchmark_pair(n: int, rng=None):
    """Perturbed identity and perturbed AR(1) (rho = 0.8) correlation matrices."""
    rng = np.random.default_rng(rng)
    return perturbed(np.eye(n), rng), perturbed(ar1_matrix(n, 0.8), rng)


def benchmark_distances(dims, trials: int = 50, geometries=("ecm", "lec", "airm", "qam"),
                        seed=0, qam: QamOptions | None = None) -> list[dict]:
    """Mean and standard deviation of the time per distance call.

    One untimed warm-up call precedes the ``trials`` timed calls of each
    (n, geometry) cell; every cell uses the same pair for a given ``n``.
    """
    qam = qam or QamOptions()
    geos = [Geometry.parse(g) for g in geometries]
    if trials < 1:
        raise DataError("trials must be positive")
    for n in dims:
        if Geometry.QAM in geos and n > qam.max_dim:
            raise DataError(f"QAM is capped at n <= {qam.max_dim}; drop it for n = {n}")
    rng = np.random.default_rng(seed)
    rows = []
    for n in dims:
        A, B = benchmark_pair(int(n), rng)
        for g in geos:
            distance(A, B, g, qam)
            times = np.empty(trials)
            for t in range(trials):
                t0 = time.perf_counter()
                distance(A, B, g, qam)
                times[t] = time.perf_counter() - t0
            rows.append({"n": int(n), "geometry": g.value, "trials": trials,
                         "mean_seconds": float(times.mean()),
                         "std_seconds": float(times.std(ddof=1)) if trials > 1 else 0.0})
    return rows


def write_table(path, rows) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: ("%.17g" % row[k]) if isinstance(row[k], float) else row[k]
                        for k in COLUMNS})
    return path
