"""Exception hierarchy shared by all modules.

Two branches matter for callers: :class:`ValidationError` means the inputs
violated a contract (bad shapes, missing columns, inadmissible config) and
maps to CLI exit code 2; :class:`NumericalError` means a computation left
its supported regime (singular Gram matrices, indefinite covariance
estimates, degenerate residuals) and maps to exit code 3.
"""

__all__ = [
    "IvxError",
    "ValidationError",
    "NumericalError",
    "MissingColumn",
    "MissingMaturity",
    "OutOfRange",
    "NonContiguousDates",
    "InfeasibleRank",
    "NonStationary",
    "Singular",
    "NotPsd",
    "NotSymmetric",
    "ZeroVariance",
    "DegenerateResiduals",
    "TooManyFailures",
]


class IvxError(Exception):
    """Base class for every error raised by this package."""

    #: Optional name of the pipeline stage that raised the error; filled in
    #: by the test orchestrator so CLI diagnostics can point at the stage.
    stage: str | None = None


class ValidationError(IvxError):
    """Input data, hypothesis, or configuration violates a precondition."""


class NumericalError(IvxError):
    """A numerical computation failed or left its supported regime."""


class MissingColumn(ValidationError):
    """A required column is absent from an input table."""


class MissingMaturity(ValidationError):
    """The bond panel lacks a maturity needed for the requested series."""


class OutOfRange(ValidationError):
    """The sample is too short for the requested horizon."""


class NonContiguousDates(ValidationError):
    """Monthly dates skip a month or are not strictly increasing."""


class InfeasibleRank(ValidationError):
    """The restriction matrix is rank-deficient."""


class NonStationary(ValidationError):
    """GARCH parameters imply an explosive variance recursion."""


class Singular(NumericalError):
    """A matrix that must be inverted is singular or badly conditioned."""


class NotPsd(NumericalError):
    """A matrix expected to be positive semidefinite has a clearly negative eigenvalue."""


class NotSymmetric(NumericalError):
    """A matrix expected to be symmetric is not, beyond rounding tolerance."""


class ZeroVariance(NumericalError):
    """A series that must vary is constant."""


class DegenerateResiduals(NumericalError):
    """Residuals are identically zero, so variance ratios are undefined."""


class TooManyFailures(NumericalError):
    """More than the tolerated share of Monte Carlo replications aborted."""
