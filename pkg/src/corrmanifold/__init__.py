"""Statistical learning on the manifold of full-rank correlation matrices."""

from ._version import __version__
from .errors import CorrManifoldError, DataError, NumericalError
from .geometry import (
    Geometry,
    QamOptions,
    airm_distance,
    distance,
    distance_matrix,
    exp_strict_lower,
    from_coords,
    geodesic,
    log_theta,
    log_theta_inv,
    log_unit_lower,
    qam_distance,
    theta,
    theta_inv,
    to_coords,
    validate_correlation,
)
from .samples import SampleSet
from .estimators import cov_to_corr, estimate_correlation, estimate_covariance
from .frechet import frechet_mean, frechet_median, frechet_variation
from .simulate import SimulationSpec, simulate
from .regression import KernelSpec, fit, gram, tune
from .dimred import cmds, embed, pga, smacof, tsne
from .clustering import cluster, validity
from .twosample import permutation_test, two_sample_stat
from .network import binarize_top_q, fingerprint
from .io import read_dataset, write_dataset

__all__ = [
    "__version__",
    "CorrManifoldError",
    "DataError",
    "Geometry",
    "KernelSpec",
    "NumericalError",
    "QamOptions",
    "SampleSet",
    "SimulationSpec",
    "airm_distance",
    "binarize_top_q",
    "cluster",
    "cmds",
    "cov_to_corr",
    "distance",
    "distance_matrix",
    "embed",
    "estimate_correlation",
    "estimate_covariance",
    "exp_strict_lower",
    "fingerprint",
    "fit",
    "frechet_mean",
    "frechet_median",
    "frechet_variation",
    "from_coords",
    "geodesic",
    "gram",
    "log_theta",
    "log_theta_inv",
    "log_unit_lower",
    "permutation_test",
    "pga",
    "qam_distance",
    "read_dataset",
    "simulate",
    "smacof",
    "theta",
    "theta_inv",
    "to_coords",
    "tsne",
    "tune",
    "two_sample_stat",
    "validate_correlation",
    "validity",
    "write_dataset",
]
