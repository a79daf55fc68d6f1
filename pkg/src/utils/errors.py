"""
ERROR HIERARCHY
Purpose: Structured exceptions shared by every package
Exit codes: ConfigError family -> 2, NumericalError family -> 1
"""


class AmechError(Exception):
    """Base class for all errors raised by the library."""


# ============================================================================
# CONFIGURATION / INPUT ERRORS
# ============================================================================

class ConfigError(AmechError):
    """Invalid user input, reported against a field path."""

    def __init__(self, field, message):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}" if field else message)


class ExpressionSyntaxError(ConfigError):
    """Malformed expression source; offset is a byte offset into the UTF-8 text."""

    def __init__(self, offset, message, source=None, field="expression"):
        self.offset = offset
        self.source = source
        super().__init__(field, f"{message} at byte {offset}")


class UndeclaredVariableError(ConfigError):
    def __init__(self, name, declared=(), field="expression"):
        self.name = name
        self.declared = tuple(declared)
        super().__init__(field, f"undeclared variable '{name}' (declared: {', '.join(self.declared) or 'none'})")


class DimensionError(ConfigError):
    def __init__(self, field, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(field, f"expected {expected}, got {actual}")


# ============================================================================
# NUMERICAL ERRORS
# ============================================================================

class NumericalError(AmechError):
    """A run that was set up correctly but could not be carried out."""


class ExpressionDomainError(NumericalError):
    def __init__(self, message, expression=None):
        self.expression = expression
        super().__init__(message)


class SingularHessianError(NumericalError):
    """Fiber Hessian W = d2L/dy dy is singular or too ill-conditioned to solve."""

    def __init__(self, state, condition_number, limit=None):
        self.state = state
        self.condition_number = condition_number
        self.limit = limit
        super().__init__(
            f"singular fiber Hessian (condition number {condition_number:.3e}) at state {state}"
        )


class HostResidualError(NumericalError):
    def __init__(self, residual, limit):
        self.residual = residual
        self.limit = limit
        super().__init__(f"host EL residual {residual:.3e} exceeds limit {limit:.1e}")


class PreconditionError(NumericalError):
    """An operation was called outside the setting it is defined for."""
