"""Exception types shared across the lab.

The command-line entry point maps these onto exit codes: ``ConfigError`` to 2
and every ``NumericalError`` to 3.
"""


class ConfigError(ValueError):
    """Raised when a command-line flag or configuration value is invalid."""


class NumericalError(RuntimeError):
    """Base class for numerical failures during an experiment."""


class NonSPDError(NumericalError):
    """Raised when a backward-Euler system matrix fails Cholesky factorization."""


class TrainingAborted(NumericalError):
    """Raised when gradient descent produces a non-finite loss."""


class QuadratureError(NumericalError):
    """Raised when the Fourier quadrature oracle does not reach its tolerance."""
