"""Exception types raised by smoothwass."""


class ConfigurationError(ValueError):
    """Invalid distribution spec, smoothing config or experiment parameters."""


class SolverError(RuntimeError):
    """An iterative solver failed to converge.

    The ``residual`` attribute carries the last residual or objective value
    reached before giving up.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateNullError(ValueError):
    """Plug-in variance requested where the distance is (numerically) zero."""


class GridTooSmallError(ValueError):
    """The smoothed measure puts too much mass outside the grid."""
