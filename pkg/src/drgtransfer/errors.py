"""Exception hierarchy shared by all modules."""


class TransferError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(TransferError, ValueError):
    pass


class SizeLimitError(TransferError):
    pass


class NotStratifiableError(TransferError):
    """Layer degrees are not constant, so no Jacobi reduction exists."""


class UnsupportedTopologyError(TransferError):
    """Graph is disconnected or its last stratum is not a single vertex."""


class DegenerateJacobiError(TransferError):
    pass


class SpectralInconsistencyError(TransferError):
    pass


class DimensionMismatchError(TransferError, ValueError):
    pass


class SolverFailureError(TransferError):
    pass


class IntegrationError(TransferError):
    pass
