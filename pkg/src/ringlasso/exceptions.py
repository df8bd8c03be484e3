"""Exception hierarchy shared by the solvers and diagnostics."""


class RingLassoError(Exception):
    """Base class for all package errors."""


class NonSymmetricError(RingLassoError, ValueError):
    pass


class IndefiniteInputError(RingLassoError, ValueError):
    pass


class ConvergenceFailure(RingLassoError, RuntimeError):
    """A dense decomposition did not converge."""


class DegenerateEigenvalueError(RingLassoError, ValueError):
    pass


class DimensionMismatch(RingLassoError, ValueError):
    pass


class NonConvergenceWarning(RuntimeWarning):
    """An iterative solver hit its iteration cap; the best iterate is returned
    and its report carries ``converged=False``."""


class SingularRidge(RingLassoError, ArithmeticError):
    pass


class InvalidInputs(RingLassoError, ValueError):
    pass


class UndefinedMetricError(RingLassoError, ZeroDivisionError):
    pass


class DatasetFormatError(RingLassoError, ValueError):
    """Malformed on-disk dataset; message names the file and row."""


class ConfigError(RingLassoError, ValueError):
    """Run configuration is malformed, has unknown keys or a wrong version."""
