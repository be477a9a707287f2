"""
Service registry: base services, approximation formulas and numeric services.

The registry file is a JSON object with three arrays:

    {
      "services":         [{"id", "operation", "arity", "impl", "description"?}],
      "formulas":         [{"id", "lhs", "rhs", "error", "validity"?, "description"?}],
      "numeric_services": [{"id", "operation", "arity", "complexity", "impl", "description"?}]
    }

Implementation expressions reference their arguments as p1..pArity. Formula
templates use pattern variables (`?x`). Numeric services for one signature are
classified by complexity when the registry is loaded, so the cheapest
candidate is the first member of the first class.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import jsonschema

from .classifier import ClassifiedLibrary, classify
from .comparator import ComparatorConfig, ComplexityFn, DEFAULT_CONFIG, VARIABLE
from .expression import (
    Bindings,
    Expr,
    Signature,
    decompose_top,
    evaluate,
    free_variables,
    match_pattern,
    parse,
    substitute,
)
from ..utils.exceptions import EvaluationError, ExpressionError, RegistryError
from ..utils.logger import log_execution_time
from ..utils.validators import (
    validate_closed_expression,
    validate_template_variables,
    validate_unique_ids,
)

logger = logging.getLogger(__name__)

_STRING = {"type": "string", "minLength": 1}
_OPERATION = {"type": "string", "minLength": 1}
_ARITY = {"type": "integer", "minimum": 0}

REGISTRY_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "properties": {
        "services": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "id": _STRING,
                    "operation": _OPERATION,
                    "arity": _ARITY,
                    "impl": _STRING,
                    "description": {"type": "string"},
                },
                "required": ["id", "operation", "arity", "impl"],
                "additionalProperties": False,
            },
        },
        "formulas": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "id": _STRING,
                    "lhs": _STRING,
                    "rhs": _STRING,
                    "error": _STRING,
                    "validity": _STRING,
                    "description": {"type": "string"},
                },
                "required": ["id", "lhs", "rhs", "error"],
                "additionalProperties": False,
            },
        },
        "numeric_services": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "id": _STRING,
                    "operation": _OPERATION,
                    "arity": _ARITY,
                    "complexity": _STRING,
                    "impl": _STRING,
                    "description": {"type": "string"},
                },
                "required": ["id", "operation", "arity", "complexity", "impl"],
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


def parameter_names(arity: int) -> List[str]:
    return [f"p{i}" for i in range(1, arity + 1)]


@dataclass(frozen=True)
class BaseService:
    id: str
    signature: Signature
    impl: Expr
    description: str = ""


@dataclass(frozen=True)
class ApproxFormula:
    """lhs ~ rhs with error bound `error`; `validity` holds where its value is > 0."""
    id: str
    lhs: Expr
    rhs: Expr
    error: Expr
    validity: Optional[Expr] = None
    description: str = ""


@dataclass(frozen=True)
class NumericService:
    id: str
    signature: Signature
    complexity: ComplexityFn
    impl: Expr
    description: str = ""


@dataclass(frozen=True)
class Registry:
    services: Dict[Signature, BaseService] = field(default_factory=dict)
    formulas: Tuple[ApproxFormula, ...] = ()
    numeric: Dict[Signature, ClassifiedLibrary] = field(default_factory=dict)
    numeric_by_id: Dict[str, NumericService] = field(default_factory=dict)

    def describe(self) -> Dict[str, Any]:
        """Counts per library and the complexity classes of every numeric signature."""
        return {
            'services': sorted(str(sig) for sig in self.services),
            'formulas': [f.id for f in self.formulas],
            'numeric_services': {
                str(sig): [lib_class.ids for lib_class in lib.classes]
                for sig, lib in sorted(self.numeric.items(), key=lambda item: str(item[0]))
            },
        }


class _RecordReader:
    """Parses the expression fields of one registry record, naming it in errors."""

    def __init__(self, array: str, index: int, record: Dict[str, Any]):
        self.array = array
        self.record = record
        self.name = record.get('id') or f"{array}[{index}]"

    def fail(self, field_name: str, message: str, **details) -> RegistryError:
        return RegistryError(f"{self.name}.{field_name}: {message}",
                             {'record': self.name, 'field': field_name, **details})

    def expression(self, field_name: str, allowed: Optional[List[str]],
                   allow_patterns: bool = False) -> Expr:
        """Parse a field; `allowed` None leaves the free variables unrestricted."""
        text = self.record[field_name]
        try:
            expr = parse(text)
        except ExpressionError as e:
            raise self.fail(field_name, str(e), text=text) from e
        if allowed is None:
            allowed = free_variables(expr)
        check = validate_closed_expression(expr, allowed, allow_patterns)
        if not check['valid']:
            raise self.fail(field_name, '; '.join(check['issues']), text=text)
        return expr

    def signature(self) -> Signature:
        return Signature(self.record['operation'], self.record['arity'])


def _read_service(index: int, record: Dict[str, Any]) -> BaseService:
    reader = _RecordReader('services', index, record)
    signature = reader.signature()
    impl = reader.expression('impl', parameter_names(signature.arity))
    return BaseService(record['id'], signature, impl, record.get('description', ''))


def _read_formula(index: int, record: Dict[str, Any]) -> ApproxFormula:
    reader = _RecordReader('formulas', index, record)
    lhs = reader.expression('lhs', None, allow_patterns=True)
    templates = {}
    for name in ('rhs', 'error', 'validity'):
        if name in record:
            templates[name] = reader.expression(name, None, allow_patterns=True)
    check = validate_template_variables(lhs, templates)
    if not check['valid']:
        raise reader.fail(check['fields'][0], '; '.join(check['issues']))
    if decompose_top(lhs)[0].is_leaf:
        raise reader.fail('lhs', "a formula pattern must have an operation at its root")
    return ApproxFormula(record['id'], lhs, templates['rhs'], templates['error'],
                         templates.get('validity'), record.get('description', ''))


def _read_numeric(index: int, record: Dict[str, Any]) -> NumericService:
    reader = _RecordReader('numeric_services', index, record)
    signature = reader.signature()
    impl = reader.expression('impl', parameter_names(signature.arity))
    body = reader.expression('complexity', [VARIABLE])
    complexity = ComplexityFn.from_expr(body)
    for n in (2.0, 16.0, 1024.0):
        try:
            complexity.log_value(n)
        except EvaluationError as e:
            raise reader.fail('complexity', f"not positive at n = {n:g}: {e}") from e
    return NumericService(record['id'], signature, complexity, impl,
                          record.get('description', ''))


@log_execution_time
def load_registry(path: Union[str, Path], cfg: Optional[ComparatorConfig] = None) -> Registry:
    """
    Load and validate a registry file.

    Args:
        path: Registry JSON file
        cfg: Comparator configuration used to classify numeric services

    Returns:
        Registry with numeric candidates classified per signature

    Raises:
        RegistryError: Unreadable file, schema violation or invalid record
    """
    cfg = cfg or DEFAULT_CONFIG
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except OSError as e:
        raise RegistryError(f"Cannot read registry file: {path}", {'error': str(e)}) from e
    except json.JSONDecodeError as e:
        raise RegistryError(f"Invalid JSON in registry file {path}: {e}") from e
    return registry_from_dict(data, cfg)


def registry_from_dict(data: Dict[str, Any], cfg: Optional[ComparatorConfig] = None) -> Registry:
    cfg = cfg or DEFAULT_CONFIG
    try:
        jsonschema.validate(instance=data, schema=REGISTRY_SCHEMA)
    except jsonschema.ValidationError as e:
        location = '/'.join(str(p) for p in e.absolute_path) or '<root>'
        raise RegistryError(f"Registry validation failed at {location}: {e.message}",
                            {'location': location}) from e

    service_records = data.get('services', [])
    formula_records = data.get('formulas', [])
    numeric_records = data.get('numeric_services', [])
    ids = [r['id'] for r in service_records + formula_records + numeric_records]
    unique = validate_unique_ids(ids)
    if not unique['valid']:
        raise RegistryError("Duplicate registry ids", {'duplicates': unique['duplicates']})

    services: Dict[Signature, BaseService] = {}
    for index, record in enumerate(service_records):
        service = _read_service(index, record)
        if service.signature in services:
            raise RegistryError(f"{service.id}: signature {service.signature} already served by "
                                f"{services[service.signature].id}",
                                {'record': service.id, 'field': 'operation'})
        services[service.signature] = service

    formulas = tuple(_read_formula(i, r) for i, r in enumerate(formula_records))

    candidates: Dict[Signature, List[NumericService]] = {}
    numeric_by_id: Dict[str, NumericService] = {}
    for index, record in enumerate(numeric_records):
        service = _read_numeric(index, record)
        candidates.setdefault(service.signature, []).append(service)
        numeric_by_id[service.id] = service

    numeric = {
        signature: classify([(s.id, s.complexity) for s in group], cfg)
        for signature, group in candidates.items()
    }
    registry = Registry(services, formulas, numeric, numeric_by_id)
    logger.info(f"Loaded registry: {len(services)} services, {len(formulas)} formulas, "
                f"{len(numeric_by_id)} numeric services over {len(numeric)} signatures")
    return registry


def find_service(reg: Registry, sig: Signature) -> Optional[BaseService]:
    """Exact signature lookup; leaves need no service."""
    if sig.is_leaf:
        return None
    return reg.services.get(sig)


def _validity_holds(predicate: Expr) -> bool:
    try:
        return evaluate(predicate, {}) > 0
    except EvaluationError:
        return False


def find_formula(reg: Registry, e: Expr) -> Optional[Tuple[ApproxFormula, Bindings]]:
    """
    First formula, in registry order, whose lhs matches `e` at the root.

    A validity predicate without free variables after substitution is
    evaluated; a non-positive or non-evaluable value rejects the formula.
    Predicates that still depend on variables are left to the caller.
    """
    for formula in reg.formulas:
        bindings = match_pattern(formula.lhs, e)
        if bindings is None:
            continue
        if formula.validity is not None:
            predicate = substitute(formula.validity, bindings)
            if not free_variables(predicate) and not _validity_holds(predicate):
                logger.debug(f"Formula {formula.id} rejected: validity {predicate} fails")
                continue
        return formula, bindings
    return None


def find_best_numeric(reg: Registry, sig: Signature) -> Optional[NumericService]:
    """Candidate of the lowest complexity class for `sig`; ties break by lowest id."""
    lib = reg.numeric.get(sig)
    if lib is None or not lib.classes:
        return None
    best = min(lib.classes[0].ids)
    return reg.numeric_by_id[best]
