"""Exception types raised across the package."""


class IsingSampleError(Exception):
    pass


class EnumerationTooLarge(IsingSampleError, ValueError):
    pass


class DimensionMismatch(IsingSampleError, ValueError):
    pass


class InvalidSubset(IsingSampleError, ValueError):
    pass


class MarginalOutOfRange(IsingSampleError, ValueError):
    pass


class OutOfRange(IsingSampleError, ValueError):
    pass


class TooLargeForExact(IsingSampleError, ValueError):
    pass


class GridTooLarge(IsingSampleError, ValueError):
    pass


class ParameterOutOfRange(IsingSampleError, ValueError):
    pass


class SpecInvalid(IsingSampleError, ValueError):
    pass


class OracleFailure(IsingSampleError, RuntimeError):
    pass


class EstimatorFailure(IsingSampleError, RuntimeError):
    """Fewer than half of the estimator repeats succeeded."""
