"""Exception types shared across the package."""


class ZeroModeError(Exception):
    """Base class for all package errors."""


class SolverError(ZeroModeError):
    """A linear solve or eigensolve did not converge.

    ``residual`` carries the final residual norm (or an array of residual
    norms for eigenpairs) so callers can report it.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DimensionError(ZeroModeError, ValueError):
    """Two objects that must share a grid (or a patch) do not."""


class RegimeError(ZeroModeError, ValueError):
    """An operation was asked for outside the field regime it covers."""


class CoverageError(ZeroModeError, ValueError):
    """A sampled gauge field does not cover the lattice patch."""


class ConfigError(ZeroModeError, ValueError):
    """Invalid scenario configuration."""
