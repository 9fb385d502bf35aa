"""Exceptions raised by idflow"""
from typing import Optional


class IdflowError(Exception):
    """Base class for every error raised by this package"""


class DimMismatchError(IdflowError):
    """Operands do not have compatible dimensions"""


class NotHermitianError(IdflowError):
    """A matrix that must be Hermitian is not"""


class TraceNotOneError(IdflowError):
    """A density matrix does not have unit trace"""


class NegativeEigenvalueError(IdflowError):
    """A density matrix has an eigenvalue below the tolerance"""


class UnsupportedDerivativeError(IdflowError):
    """The state derivative leaves the support of the state, so the metric is not defined there"""


class EvaluationFailedError(IdflowError):
    """A state family could not be evaluated at a requested point"""


class NegativeDeterminantError(IdflowError):
    """A metric has an eigenvalue that is negative beyond noise"""


class SingularMetricError(IdflowError):
    """A metric is not invertible"""


class GridTooShortError(IdflowError):
    """A time series has too few samples for the requested operation"""


class StepTooLargeError(IdflowError):
    """The half-step error estimate of the integrator exceeds its tolerance"""


class PoleOnGridError(IdflowError):
    """A decay rate is not finite at a time the integrator needs"""


class OutsideBallError(IdflowError):
    """A Bloch vector lies outside the unit ball"""


class PureBoundaryError(IdflowError):
    """A closed form diverges because the state sits on the pure-state boundary"""


class PoleError(IdflowError):
    """The decay rate has a pole (h(t) = 0) at the requested time"""


class EmptySeriesError(IdflowError):
    """A series has no records to analyse"""


class IoError(IdflowError):
    """An output file could not be written"""


class ConfigError(IdflowError):
    """Base class for experiment configuration problems"""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(f'{path}: {message}' if path else message)
        self.path = path


class SchemaError(ConfigError):
    """The configuration document does not match the schema"""


class RangeError(ConfigError):
    """A configuration value is outside its allowed range"""
