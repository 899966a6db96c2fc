"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` that the CLI echoes in
its JSON error payload.
"""


__all__ = [
    "GeosubError",
    "ParameterError",
    "ArgumentOrderError",
    "RangeError",
    "DomainError",
    "ConvergenceError",
    "RegionError",
    "SamplerError",
    "UnknownFamilyError",
]


class GeosubError(Exception):
    code = "error"


class ParameterError(GeosubError, ValueError):
    """A parameter is outside its admissible range."""

    code = "parameter_out_of_range"


class ArgumentOrderError(ParameterError):
    code = "argument_order"


class RangeError(GeosubError, OverflowError):
    """An exact or floating result would leave its representable range."""

    code = "range"


class DomainError(GeosubError, ZeroDivisionError):
    code = "domain"


class ConvergenceError(GeosubError, ArithmeticError):
    """A series failed to converge or lost too many digits.

    Attributes
    ----------
    partial_sum : float
        Value accumulated before giving up.
    tail_estimate : float
        Estimated magnitude of the neglected tail (``inf`` when unknown).
    n_terms : int
        Number of terms summed.
    """

    code = "convergence"

    def __init__(self, message, partial_sum=float("nan"), tail_estimate=float("inf"), n_terms=0):
        super().__init__(message)
        self.partial_sum = partial_sum
        self.tail_estimate = tail_estimate
        self.n_terms = n_terms


class RegionError(GeosubError, ValueError):
    """Parameters lie outside the convergence region of a closed-form series."""

    code = "validity_region"


class SamplerError(GeosubError, RuntimeError):
    code = "sampler_degenerate"


class UnknownFamilyError(ParameterError):
    code = "unknown_family"
