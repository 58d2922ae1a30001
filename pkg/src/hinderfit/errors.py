"""Exception hierarchy shared by all hinderfit modules."""


class HinderfitError(Exception):
    """Base class for every error raised by this package."""

    #: short machine-readable tag, used by the CLI error objects
    code = "hinderfit_error"


class DomainError(HinderfitError, ValueError):
    code = "domain_error"


class NonPositiveH(DomainError):
    code = "non_positive_h"


class LogisticOutOfRange(DomainError):
    code = "logistic_out_of_range"


class OverflowGuard(DomainError, OverflowError):
    code = "overflow_guard"


class UnsupportedFamily(DomainError):
    code = "unsupported_family"


class NoPeak(DomainError):
    code = "no_peak"


class NonPositiveQh(DomainError):
    code = "non_positive_qh"


class LogisticDomain(DomainError):
    code = "logistic_domain"


class NonPositiveRate(DomainError):
    code = "non_positive_rate"


class AlphaTooSmall(DomainError):
    code = "alpha_too_small"


class NoConvergence(HinderfitError, RuntimeError):
    code = "no_convergence"


class TooShort(DomainError):
    code = "too_short"


class ZeroVariance(DomainError):
    code = "zero_variance"


class DegenerateDof(DomainError):
    code = "degenerate_dof"


class OptimizerFailure(HinderfitError, RuntimeError):
    code = "optimizer_failure"


class SingularityReached(DomainError):
    code = "singularity_reached"


class StepOverflow(SingularityReached):
    code = "step_overflow"


class ValidationError(DomainError):
    """Malformed input data (CSV rows, series construction)."""

    code = "validation_error"


class ParseError(ValidationError):
    code = "parse_error"

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class DuplicateTime(ValidationError):
    code = "duplicate_time"


class NonPositiveQ(ValidationError):
    code = "non_positive_q"


class TooFewRows(ValidationError):
    code = "too_few_rows"


class GateFailure(HinderfitError):
    """Raised when a series does not pass the growth/deceleration gates."""

    code = "gate_failure"

    def __init__(self, message, gate=None):
        super().__init__(message)
        self.gate = gate
