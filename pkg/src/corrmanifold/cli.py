"""Command-line interface: ``corrmanifold <verb> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import benchmark as bench
from . import clustering, dimred, estimators, frechet, network, regression, twosample
from ._version import __version__
from .errors import DataError, NumericalError
from .geometry import Geometry, distance_matrix
from .io import read_dataset, read_matrix, report, write_dataset, write_json, write_matrix
from .samples import SampleSet
from .simulate import SimulationSpec, simulate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_workers() -> int:
    raw = os.environ.get("CORRMANIFOLD_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--geometry", choices=[g.value for g in Geometry], default="ecm")
    p.add_argument("--input", help="dataset manifest (JSON)")
    p.add_argument("--output", default=".", help="output directory (default: .)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None,
                   help="worker threads (default: $CORRMANIFOLD_WORKERS or 1)")
    return p


def _params(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _out(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args, attr="input") -> SampleSet:
    path = getattr(args, attr)
    if not path:
        raise DataError(f"--{attr.replace('_', '-')} is required")
    return read_dataset(path)


def _emit(args, verb, **payload):
    out = _out(args)
    path = write_json(out / f"{verb}.json", report(f"corrmanifold.{verb}", _params(args), **payload))
    return path


# ---------------------------------------------------------------------------
# verbs


def cmd_estimate(args):
    if not args.timeseries:
        raise DataError("--timeseries needs at least one CSV file")
    blocks = None
    if args.blocks:
        blocks = Path(args.blocks).read_text(encoding="utf-8").replace("\n", ",").split(",")
        blocks = [b.strip() for b in blocks if b.strip()]
    mats, ids, info = [], [], []
    for f in args.timeseries:
        x = read_matrix(f, square=False)
        if blocks is not None:
            x, _ = estimators.first_pc_reduce(x, blocks)
        est = estimators.estimate_covariance(x, args.estimator, args.tau)
        mats.append(estimators.cov_to_corr(est.matrix))
        ids.append(Path(f).stem)
        info.append({"id": Path(f).stem, "shrinkage": est.shrinkage, "full_rank": est.full_rank})
    s = SampleSet.from_matrices(mats, ids=ids, metadata={"estimator": args.estimator})
    manifest = write_dataset(s, _out(args))
    _emit(args, "estimate", manifest=str(manifest), matrices=info)
    print(f"wrote {len(mats)} correlation matrices to {manifest}")


def _centroid(args, fn, verb):
    s = _load(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = fn(s, args.geometry)
    out = _out(args)
    write_matrix(out / f"{verb}.csv", res.center)
    _emit(args, verb, variation=res.variation, iterations=res.iterations,
          converged=res.converged, spd_center=res.spd_center, collinear=res.collinear,
          warnings=[str(w.message) for w in caught], center=f"{verb}.csv")
    print(f"variation {res.variation:.17g}")


def cmd_mean(args):
    _centroid(args, frechet.frechet_mean, "mean")


def cmd_median(args):
    _centroid(args, frechet.frechet_median, "median")


def cmd_distmat(args):
    s = _load(args)
    D = distance_matrix(s, geometry=args.geometry, workers=args.workers)
    write_matrix(_out(args) / "distances.csv", D)
    _emit(args, "distmat", ids=list(s.ids), matrix="distances.csv")
    print(f"wrote {D.shape[0]}x{D.shape[1]} distance matrix")


def cmd_regress(args):
    s = _load(args)
    grid = args.theta_grid or regression.DEFAULT_THETA_GRID
    tuned = regression.tune(args.method, s, theta_grid=grid, folds=args.folds, seed=args.seed,
                            geometry=args.geometry)
    model = regression.fit(args.method, s, tuned.spec, **tuned.params)
    payload = {"theta": tuned.spec.theta, "selected": tuned.params, "cv_mse": tuned.cv_mse,
               "grid": tuned.table}
    if args.query:
        q = read_dataset(args.query)
        pred = model.predict(q)
        payload["predictions"] = [{"id": i, "prediction": float(v)} for i, v in zip(q.ids, pred)]
        if q.labels is not None:
            payload["test_mse"] = float(np.mean((pred - q.labels) ** 2))
    _emit(args, "regress", **payload)
    print(f"theta {tuned.spec.theta:g} cv_mse {tuned.cv_mse:.6g}")


def cmd_embed(args):
    s = _load(args)
    opts = {}
    if args.method == "tsne":
        opts = {"perplexity": args.perplexity, "seed": args.seed}
    elif args.method == "ae":
        opts = {"seed": args.seed, "hidden": args.hidden}
    distances = None
    if args.method in ("cmds", "mmds", "tsne"):
        distances = distance_matrix(s, geometry=args.geometry, workers=args.workers)
    res = dimred.embed(args.method, s, args.dim, args.geometry, distances=distances, **opts)
    write_matrix(_out(args) / "embedding.csv", res.points)
    ev = None if res.explained_variance is None else res.explained_variance.tolist()
    _emit(args, "embed", ids=list(s.ids), stress_or_loss=res.stress_or_loss,
          explained_variance=ev, converged=res.converged, points="embedding.csv")
    print(f"{args.method} loss {res.stress_or_loss:.6g}")


def cmd_cluster(args):
    s = _load(args)
    res = clustering.cluster(args.method, s, args.k, args.geometry, args.seed,
                             restarts=args.restarts, workers=args.workers)
    payload = {"labels": res.labels.tolist(), "k": res.k, "inertia": res.inertia,
               "converged": res.converged, "ids": list(s.ids)}
    if res.medoids is not None:
        payload["medoids"] = [s.ids[i] for i in res.medoids]
    if len(np.unique(res.labels)) < s.m:
        payload["silhouette"] = clustering.validity("silhouette", s, res.labels, args.geometry)
        if Geometry.parse(args.geometry).flat:
            payload["calinski_harabasz"] = clustering.validity("ch", s, res.labels, args.geometry)
    _emit(args, "cluster", **payload)
    print(f"inertia {res.inertia:.6g}")


def cmd_test2(args):
    s = _load(args)
    if args.input2:
        s1, s2 = s, read_dataset(args.input2)
    else:
        parts = list(s.split_by_group().values()) if s.groups else []
        if len(parts) != 2:
            raise DataError("need two groups in the manifest or a second manifest via --input2")
        s1, s2 = parts
    rep = twosample.permutation_test(args.stat, s1, s2, args.geometry, args.permutations,
                                     args.seed, args.theta, workers=args.workers)
    _emit(args, "test2", **rep.to_dict())
    print(f"{args.stat} observed {rep.observed:.6g} p_value {rep.p_value:.6g}")


def cmd_fingerprint(args):
    train = _load(args, "train") if args.train else _load(args)
    test = _load(args, "test")
    method = args.method or args.geometry
    res = network.fingerprint(train, test, method, workers=args.workers)
    _emit(args, "fingerprint", **res.to_dict())
    print(f"accuracy {res.accuracy:.6g}")


def cmd_simulate(args):
    spec = SimulationSpec(args.generator, args.p, args.count, args.dof, args.rho,
                          args.contamination, args.seed)
    manifest = write_dataset(simulate(spec), _out(args))
    print(f"wrote {args.count} samples to {manifest}")


def cmd_benchmark(args):
    geos = args.geometries or [g.value for g in Geometry]
    rows = bench.benchmark_distances(args.dims, args.trials, geos, args.seed)
    out = _out(args)
    bench.write_table(out / "benchmark.csv", rows)
    _emit(args, "benchmark", rows=rows, table="benchmark.csv")
    for r in rows:
        print(f"n={r['n']:<5d} {r['geometry']:<5s} {r['mean_seconds']:.3e} s")


def cmd_binarize(args):
    out = _out(args)
    if args.matrix:
        items = [(Path(args.matrix).stem, read_matrix(args.matrix))]
    else:
        s = _load(args)
        items = list(zip(s.ids, s.items))
    files = []
    for cid, C in items:
        B = network.binarize_top_q(C, args.q)
        name = f"binarized_{cid}.csv"
        write_matrix(out / name, B)
        files.append({"id": cid, "path": name, "edges": int(B.sum() // 2)})
    _emit(args, "binarize", matrices=files)
    print(f"binarized {len(files)} matrices")


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="corrmanifold", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    common = [_common()]

    def verb(name, func, help_):
        p = sub.add_parser(name, parents=common, help=help_)
        p.set_defaults(func=func)
        return p

    p = verb("estimate", cmd_estimate, "correlation matrices from time-series CSV files")
    p.add_argument("--timeseries", nargs="+", help="T x n CSV files, one per subject")
    p.add_argument("--estimator", choices=[e.value for e in estimators.Estimator], default="oas")
    p.add_argument("--tau", type=float, default=1.0, help="ridge parameter")
    p.add_argument("--blocks", help="file of per-column block labels (first-PC reduction)")

    verb("mean", cmd_mean, "Fréchet mean")
    verb("median", cmd_median, "Fréchet median")
    verb("distmat", cmd_distmat, "pairwise distance matrix")

    p = verb("regress", cmd_regress, "kernel regression tuned by cross-validation")
    p.add_argument("--method", choices=[r.value for r in regression.Regressor], default="gp")
    p.add_argument("--query", help="manifest to predict")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--theta-grid", type=float, nargs="+")

    p = verb("embed", cmd_embed, "low-dimensional embedding")
    p.add_argument("--method", choices=dimred.METHODS, default="pga")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--hidden", type=int, default=32)

    p = verb("cluster", cmd_cluster, "k-means, k-medoids or spectral clustering")
    p.add_argument("--method", choices=[m.value for m in clustering.Method], default="kmeans")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--restarts", type=int, default=10)

    p = verb("test2", cmd_test2, "permutation two-sample test")
    p.add_argument("--stat", choices=[s.value for s in twosample.Statistic], default="energy")
    p.add_argument("--permutations", type=int, default=999)
    p.add_argument("--theta", type=float, default=1.0, help="MMD kernel parameter")
    p.add_argument("--input2", help="second sample manifest (otherwise split --input by group)")

    p = verb("fingerprint", cmd_fingerprint, "1-NN subject identification")
    p.add_argument("--train", help="train manifest (defaults to --input)")
    p.add_argument("--test", required=True, help="test manifest")
    p.add_argument("--method", choices=[g.value for g in Geometry] + list(network.BASELINES),
                   help="dissimilarity (defaults to --geometry)")

    p = verb("simulate", cmd_simulate, "normalized Wishart samples")
    p.add_argument("--generator", choices=["wishart-identity", "wishart-ar1", "mixture"],
                   default="wishart-identity")
    p.add_argument("--p", type=int, default=10)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--dof", type=float)
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--contamination", type=int, default=0)

    p = verb("benchmark", cmd_benchmark, "distance timing table")
    p.add_argument("--dims", type=int, nargs="+", default=[10, 50, 100])
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--geometries", nargs="+", choices=[g.value for g in Geometry])

    p = verb("binarize", cmd_binarize, "keep the top-q fraction of edges")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--matrix", help="single matrix CSV instead of --input")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers is None:
        args.workers = _default_workers()
    elif args.workers < 1:
        parser.error("--workers must be positive")
    try:
        args.func(args)
    except DataError as exc:
        print(f"corrmanifold: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"corrmanifold: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"corrmanifold: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except np.linalg.LinAlgError as exc:
        print(f"corrmanifold: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
