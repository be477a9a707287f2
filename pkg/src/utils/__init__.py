"""
Utilities package initialization for approxcomp helper functions.

Validators and helpers depend on the expression module; import them directly.
"""

from .logger import setup_logger, log_execution_time
from .exceptions import *

__all__ = [
    'setup_logger',
    'log_execution_time',
    'ApproxCompException',
    'ConfigurationError',
    'ExpressionError',
    'EvaluationError',
    'ComparatorError',
    'ClassificationError',
    'RegistryError',
    'CompositionError',
    'PlanError',
]
