"""
Functional modules of approxcomp.

Note: Import modules directly (e.g. `from src.modules.comparator import comp`);
the validators in src.utils depend on the expression module, so this package
initializer stays empty.
"""

__all__ = [
    'expression',
    'comparator',
    'classifier',
    'registry',
    'composer',
    'reporting',
]
