"""
Custom exceptions for the approxcomp library.

This module defines all custom exception classes used throughout the package
for specific error handling and debugging.
"""


class ApproxCompException(Exception):
    """Base exception class for all approxcomp-specific exceptions."""

    def __init__(self, message: str, details: dict = None):
        """
        Initialize exception with message and optional details.

        Args:
            message: Human-readable error message
            details: Additional error context and details
        """
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self):
        if self.details:
            return f"{self.message} | Details: {self.details}"
        return self.message


class ConfigurationError(ApproxCompException):
    """Raised when configuration loading or validation fails."""
    pass


class ExpressionError(ApproxCompException):
    """Raised when an expression cannot be built or transformed."""
    pass


class ExpressionSyntaxError(ExpressionError):
    """Raised by the parser; carries the byte offset and the expected token."""

    def __init__(self, message: str, offset: int, expected: str = ""):
        super().__init__(message, {'offset': offset, 'expected': expected})
        self.offset = offset
        self.expected = expected


class ArityError(ExpressionError):
    """Raised when a builtin function is called with the wrong argument count."""
    pass


class SubstitutionError(ExpressionError):
    """Raised when a template references an unbound pattern variable."""
    pass


class EvaluationError(ApproxCompException):
    """Raised when an expression cannot be evaluated."""
    pass


class UnboundVariableError(EvaluationError):
    """Raised when a free variable has no binding."""
    pass


class EvaluationDomainError(EvaluationError):
    """Raised for ln of non-positive values, division by zero and similar."""
    pass


class EvaluationOverflowError(EvaluationError):
    """Raised when a linear-domain value leaves the float range."""
    pass


class ComparatorError(ApproxCompException):
    """Raised when the complexity comparator cannot proceed."""
    pass


class BracketError(ComparatorError):
    """Raised when bisection endpoints do not bracket a sign change."""
    pass


class ClassificationError(ApproxCompException):
    """Raised when a classified library cannot be built or updated."""
    pass


class RegistryError(ApproxCompException):
    """Raised when a registry file fails to load or validate."""
    pass


class CompositionError(ApproxCompException):
    """Raised when no service, formula or numeric method covers a sub-expression."""

    def __init__(self, message: str, expression=None, signature=None, path=()):
        super().__init__(message, {
            'signature': str(signature) if signature is not None else None,
            'path': '/'.join(path) or 'root',
        })
        self.expression = expression
        self.signature = signature
        self.path = tuple(path)


class FormulaDepthError(CompositionError):
    """Raised when nested formula applications exceed the configured depth."""
    pass


class PlanError(ApproxCompException):
    """Base class for plan execution and serialization failures."""
    pass


class PlanExecutionError(PlanError):
    """Raised when a plan node fails to evaluate."""
    pass


class PlanFormatError(PlanError):
    """Raised when plan JSON cannot be read back."""
    pass
