"""
Helper utilities for approxcomp.

Input file readers, binding parsers and JSON rendering shared by the CLI and
the tests.
"""

import json
import math
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from .exceptions import ApproxCompException, ClassificationError, ExpressionError
from ..modules.comparator import ComplexityFn

_DEFINITION_RE = re.compile(r'^\s*([A-Za-z_][A-Za-z0-9_.\-]*)\s*=\s*(.+?)\s*$')
_BINDING_RE = re.compile(r'^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([-+]?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?)\s*$')


def parse_definition(text: str, line_number: Optional[int] = None) -> Tuple[str, ComplexityFn]:
    """
    Parse `id = expression` into an (id, ComplexityFn) pair.

    Raises:
        ExpressionError: Malformed line or expression
    """
    where = f"line {line_number}: " if line_number is not None else ""
    match = _DEFINITION_RE.match(text)
    if not match:
        raise ExpressionError(f"{where}expected 'id = expression', got {text.strip()!r}",
                              {'line': line_number})
    identifier, source = match.groups()
    try:
        return identifier, ComplexityFn.from_expr(source)
    except ExpressionError as e:
        raise ExpressionError(f"{where}{e.message}", {'line': line_number, **e.details}) from e


def read_function_list(path: Union[str, Path]) -> List[Tuple[str, ComplexityFn]]:
    """
    Read a function-list file: one `id = expression` per line.

    `#` starts a comment; blank lines are ignored.

    Raises:
        ApproxCompException: Unreadable file
        ExpressionError: Malformed line
        ClassificationError: Duplicate id
    """
    try:
        lines = Path(path).read_text(encoding='utf-8').splitlines()
    except OSError as e:
        raise ApproxCompException(f"Cannot read function list: {path}", {'error': str(e)}) from e

    functions: List[Tuple[str, ComplexityFn]] = []
    seen: Dict[str, int] = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.split('#', 1)[0]
        if not line.strip():
            continue
        identifier, fn = parse_definition(line, number)
        if identifier in seen:
            raise ClassificationError(
                f"line {number}: duplicate id {identifier} (first defined on line {seen[identifier]})",
                {'id': identifier, 'line': number})
        seen[identifier] = number
        functions.append((identifier, fn))
    return functions


def parse_bindings(text: Optional[str]) -> Dict[str, float]:
    """
    Parse `x=1,y=2.5` into variable values; decimal literals only.

    Raises:
        ExpressionError: Malformed binding
    """
    bindings: Dict[str, float] = {}
    if not text or not text.strip():
        return bindings
    for part in text.split(','):
        match = _BINDING_RE.match(part)
        if not match:
            raise ExpressionError(f"Malformed binding {part.strip()!r}; expected name=decimal")
        bindings[match.group(1)] = float(match.group(2))
    return bindings


def to_jsonable(value: Any) -> Any:
    """Replace non-finite floats by strings so JSON output stays standard."""
    if isinstance(value, float) and not math.isfinite(value):
        return 'nan' if math.isnan(value) else ('inf' if value > 0 else '-inf')
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


def dump_json(value: Any, indent: Optional[int] = 2) -> str:
    return json.dumps(to_jsonable(value), indent=indent, sort_keys=True, allow_nan=False)
