"""Exception and warning hierarchy.

Two families matter to callers: :class:`DataError` (bad or inconsistent
input, CLI exit code 2) and :class:`NumericalError` (a numerical routine
broke down, CLI exit code 3). Soft failures that still produce a usable
result are emitted as :class:`CorrManifoldWarning` subclasses.
"""


class CorrManifoldError(Exception):
    """Base class for all library errors."""


class DataError(CorrManifoldError, ValueError):
    """Input data violates a contract."""


class NumericalError(CorrManifoldError, ArithmeticError):
    """A numerical procedure failed."""


class NotSymmetric(DataError):
    pass


class NotPositiveDefinite(DataError):
    pass


class NotUnitDiagonal(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class UnsupportedGeometry(DataError):
    pass


class DegenerateInput(DataError):
    """Constant column or otherwise unusable time series."""


class EmptySample(DataError):
    pass


class TooFewSamples(DataError):
    pass


class InsufficientData(DataError):
    pass


class BadPerplexity(DataError):
    pass


class BadK(DataError):
    pass


class IdMismatch(DataError):
    pass


class ParseError(DataError):
    pass


class ValidationError(DataError):
    """A dataset entry failed validation; ``entry_id`` names it."""

    def __init__(self, message, entry_id=None):
        super().__init__(message)
        self.entry_id = entry_id


class CholeskyFailure(NumericalError):
    pass


class SingularResult(NumericalError):
    """Sample covariance is rank deficient; use a shrinkage estimator."""


class SingularSystem(NumericalError):
    pass


class NotConverged(NumericalError):
    pass


class NumericalUnderflow(NumericalError):
    pass


class CorrManifoldWarning(UserWarning):
    pass


class QamNotConverged(CorrManifoldWarning):
    pass


class KarcherNotConverged(CorrManifoldWarning):
    pass


class CollinearSample(CorrManifoldWarning):
    pass


class AnchorOscillation(CorrManifoldWarning):
    pass


class RankDeficient(CorrManifoldWarning):
    pass


class EmptyClusterRepair(CorrManifoldWarning):
    pass


class SingletonClusterConvention(CorrManifoldWarning):
    pass


class NonconvergedFlag(CorrManifoldWarning):
    pass


class TieWarning(CorrManifoldWarning):
    """Ties were broken by index order."""
