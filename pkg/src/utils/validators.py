"""
Validation utilities for approxcomp.

Validators follow one convention: they return a result dictionary with a
'valid' flag and a list of human-readable 'issues'; callers decide which
exception to raise.
"""

from typing import Any, Dict, Iterable, Optional

from ..modules.expression import (
    Expr,
    free_variables,
    pattern_variables,
)


def _result(issues) -> Dict[str, Any]:
    return {'valid': not issues, 'issues': list(issues)}


def validate_comparator_settings(settings: Any) -> Dict[str, Any]:
    """
    Check the invariants of the comparator tuning knobs.

    Args:
        settings: Object exposing the ComparatorConfig attributes

    Returns:
        Dictionary with validation results
    """
    rules = [
        ('q', lambda v: isinstance(v, int) and v >= 2, "q must be an integer >= 2"),
        ('k', lambda v: isinstance(v, int) and v >= 2, "k must be an integer >= 2"),
        ('epsilon', lambda v: v > 0, "epsilon must be > 0"),
        ('max_samples', lambda v: isinstance(v, int) and v >= settings.k,
         "max_samples (L) must be an integer >= k"),
        ('tmax', lambda v: isinstance(v, int) and v >= 1, "tmax must be an integer >= 1"),
        ('pmax', lambda v: isinstance(v, int) and v >= 0, "pmax must be an integer >= 0"),
        ('fd_step', lambda v: v > 0, "fd_step must be > 0"),
        ('zero_tol', lambda v: v > 0, "zero_tol must be > 0"),
        ('bisect_tol', lambda v: v > 0, "bisect_tol must be > 0"),
        ('zero_samples', lambda v: isinstance(v, int) and v >= 2,
         "zero_samples must be an integer >= 2"),
        ('max_roots', lambda v: isinstance(v, int) and v >= 1, "max_roots must be an integer >= 1"),
        ('skip_cap', lambda v: isinstance(v, int) and v >= 1, "skip_cap must be an integer >= 1"),
        ('flat_cap', lambda v: isinstance(v, int) and v >= 1, "flat_cap must be an integer >= 1"),
        ('bisect_max_iter', lambda v: isinstance(v, int) and v >= 1,
         "bisect_max_iter must be an integer >= 1"),
        ('overflow_log_ratio', lambda v: v > 0, "overflow_log_ratio must be > 0"),
    ]
    issues = []
    for name, check, message in rules:
        value = getattr(settings, name)
        try:
            ok = check(value)
        except TypeError:
            ok = False
        if not ok:
            issues.append(f"{message} (got {value!r})")
    return _result(issues)


def validate_template_variables(lhs: Expr, templates: Dict[str, Optional[Expr]]) -> Dict[str, Any]:
    """
    Check that every pattern variable of each template also occurs in `lhs`.

    Args:
        lhs: Formula pattern
        templates: Field name -> template expression (None entries skipped)

    Returns:
        Dictionary with validation results; 'fields' lists offending fields
    """
    allowed = pattern_variables(lhs)
    issues, fields = [], []
    for field, template in templates.items():
        if template is None:
            continue
        extra = pattern_variables(template) - allowed
        if extra:
            fields.append(field)
            names = ', '.join('?' + v for v in sorted(extra))
            issues.append(f"{field} uses pattern variables absent from lhs: {names}")
    result = _result(issues)
    result['fields'] = fields
    return result


def validate_closed_expression(expr: Expr, allowed_variables: Iterable[str],
                               allow_patterns: bool = False) -> Dict[str, Any]:
    """
    Check the free variables (and pattern variables) of an expression.

    Args:
        expr: Expression to check
        allowed_variables: Names the expression may reference
        allow_patterns: Whether PatternVar nodes are permitted

    Returns:
        Dictionary with validation results
    """
    issues = []
    extra = free_variables(expr) - frozenset(allowed_variables)
    if extra:
        issues.append(f"unexpected free variables: {', '.join(sorted(extra))}")
    if not allow_patterns and pattern_variables(expr):
        issues.append("pattern variables are only allowed in formulas")
    return _result(issues)


def validate_unique_ids(ids: Iterable[str]) -> Dict[str, Any]:
    """
    Check that identifiers are unique.

    Returns:
        Dictionary with validation results; 'duplicates' lists repeated ids
    """
    seen, duplicates = set(), []
    for identifier in ids:
        if identifier in seen and identifier not in duplicates:
            duplicates.append(identifier)
        seen.add(identifier)
    result = _result([f"duplicate id: {d}" for d in duplicates])
    result['duplicates'] = duplicates
    return result
