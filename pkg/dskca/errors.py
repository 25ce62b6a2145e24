"""
Contains dskca errors.

.. exception:: DskcaError(Exception)
    Implements base error that might be raised during the toolkit usage
.. exception:: UsageError(DskcaError)
    Bad command line (exit code 1)
.. exception:: ConfigurationError(DskcaError, ValueError)
    Inconsistent training configuration or schedule
.. exception:: KernelSpecError(DskcaError, ValueError)
    Invalid kernel specification or unsupported family for the operation
.. exception:: DimensionMismatchError(DskcaError, ValueError)
    Array shapes do not agree
.. exception:: NonFiniteError(DskcaError, ValueError)
    NaN/Inf in inputs or in an accumulated result
.. exception:: ModelError(DskcaError, ValueError)
    Invalid coefficient model mutation
.. exception:: DivergenceError(DskcaError)
    A solver step produced non-finite evaluations
.. exception:: OracleError(DskcaError)
    An exact reference could not be computed
.. exception:: RankDeficiencyError(OracleError)
    A basis is numerically rank deficient
.. exception:: DiagnosticsError(DskcaError, ValueError)
    A diagnostic cannot be computed from the given trace/evaluations
.. exception:: DatasetError(DskcaError)
    Dataset file could not be read
.. exception:: ModelFormatError(DskcaError)
    Model file is malformed

.. const:: EXIT_CODES
    Contains pairs of the exception class and the process exit code (e.g. ` UsageError: 1 `)
"""

from __future__ import annotations

from typing import (
    Optional
)


class DskcaError(Exception):
    """ Implements base error that might be raised during the toolkit usage """

    exit_code = 2


class UsageError(DskcaError):
    """
    Implements command line usage error.

    Cause: User.

    Shortly:
        * unknown flag or subcommand;
        * missing required option.
    """

    exit_code = 1


class ConfigurationError(DskcaError, ValueError):
    """
    Implements configuration error.

    Shortly:
        * non-positive batch sizes or step-size parameters;
        * feature budget smaller than one block;
        * `revisit=none` with a budget that cannot cover all iterations.
    """


class KernelSpecError(DskcaError, ValueError):
    """ Implements kernel specification error (bad bandwidth/dim, family not supported by the operation) """


class DimensionMismatchError(DskcaError, ValueError):
    """ Implements shape mismatch error """


class NonFiniteError(DskcaError, ValueError):
    """ Implements error for NaN/Inf values in inputs or accumulated results """


class ModelError(DskcaError, ValueError):
    """
    Implements coefficient model error.

    Shortly:
        * non-contiguous block index on append;
        * coefficient matrix of the wrong shape.
    """


class DivergenceError(DskcaError):
    """
    Implements solver divergence error.

    Raised when the evaluations of the current iterate are not finite. The iterate is never
    renormalized or clamped, so the error is the only signal of an unstable step size.
    """

    def __init__(self, message: str, iteration: Optional[int] = None, max_abs_h: Optional[float] = None) -> None:
        super().__init__(message)

        self.iteration = iteration
        self.max_abs_h = max_abs_h


class OracleError(DskcaError):
    """ Implements exact-reference computation error (non-PSD input, singular covariance, coarse grid) """


class RankDeficiencyError(OracleError):
    """ Implements rank deficiency error (condition number over the configured limit) """


class DiagnosticsError(DskcaError, ValueError):
    """ Implements diagnostics error (too few trace points, nonpositive potentials) """


class DatasetError(DskcaError):
    """
    Implements dataset reading error.

    Carries 1-based `row` and `col` of the offending cell when known.
    """

    def __init__(self, message: str, row: Optional[int] = None, col: Optional[int] = None) -> None:
        super().__init__(message)

        self.row = row
        self.col = col


class ModelFormatError(DskcaError):
    """ Implements model file format error (bad magic, truncated payload, header mismatch) """


_narrowly_focused_errors = {
    UsageError,
    ConfigurationError,
    KernelSpecError,
    DimensionMismatchError,
    NonFiniteError,
    ModelError,
    DivergenceError,
    OracleError,
    RankDeficiencyError,
    DiagnosticsError,
    DatasetError,
    ModelFormatError
}

EXIT_CODES = {exception: exception.exit_code for exception in _narrowly_focused_errors}
