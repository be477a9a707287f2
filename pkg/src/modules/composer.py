"""
Composition of executable evaluation plans from a service registry.

A semantic description (an expression) is covered recursively. At each
operation node the cascade is:

1. a base service with the node's signature (Invoke over the composed children)
2. the first approximation formula whose pattern matches the node
   (Approx wrapping the plan of the instantiated right-hand side)
3. the cheapest numeric service for the signature (NumericInvoke)

Plans are self-contained: invoke nodes carry the implementation expression
of their service, so a plan can be executed or re-read without the registry.
"""

import json
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from .expression import (
    Expr,
    Number,
    PatternVar,
    Var,
    decompose_top,
    evaluate,
    format_expr,
    free_variables,
    parse,
    substitute,
)
from .registry import (
    Registry,
    find_best_numeric,
    find_formula,
    find_service,
    parameter_names,
)
from ..utils.exceptions import (
    CompositionError,
    EvaluationError,
    ExpressionError,
    FormulaDepthError,
    PlanExecutionError,
    PlanFormatError,
)
from ..utils.logger import log_execution_time

logger = logging.getLogger(__name__)

DEFAULT_MAX_FORMULA_DEPTH = 8


# ---------------------------------------------------------------------------
# Plan nodes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeafNumber:
    text: str


@dataclass(frozen=True)
class LeafVar:
    name: str


@dataclass(frozen=True)
class Invoke:
    service: str
    impl: Expr
    args: Tuple['PlanNode', ...]


@dataclass(frozen=True)
class NumericInvoke:
    service: str
    impl: Expr
    complexity: str
    args: Tuple['PlanNode', ...]


@dataclass(frozen=True)
class Approx:
    """Replaces `source` by the plan `inner` of a formula's right-hand side."""
    formula: str
    source: Expr
    error: Expr
    inner: 'PlanNode'


PlanNode = Union[LeafNumber, LeafVar, Invoke, NumericInvoke, Approx]


@dataclass(frozen=True)
class ErrorAnnotation:
    formula: str
    error: Expr


@dataclass(frozen=True)
class Assumption:
    """Validity predicate of an applied formula; holds where its value is > 0."""
    formula: str
    validity: Expr


@dataclass(frozen=True)
class Plan:
    root: PlanNode
    errors: Tuple[ErrorAnnotation, ...] = ()
    assumptions: Tuple[Assumption, ...] = ()


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------

class _Composer:

    def __init__(self, reg: Registry, max_depth: int):
        self.reg = reg
        self.max_depth = max_depth
        self.errors: List[ErrorAnnotation] = []
        self.assumptions: List[Assumption] = []

    def compose(self, e: Expr, path: Tuple[str, ...] = (), depth: int = 0) -> PlanNode:
        if isinstance(e, Number):
            return LeafNumber(e.text)
        if isinstance(e, Var):
            return LeafVar(e.name)
        if isinstance(e, PatternVar):
            raise CompositionError(f"Pattern variable ?{e.name} in a semantic description",
                                   expression=e, path=path)

        sig, children = decompose_top(e)
        service = find_service(self.reg, sig)
        if service is not None:
            return Invoke(service.id, service.impl, self._children(sig, children, path, depth))

        match = find_formula(self.reg, e)
        if match is not None:
            formula, bindings = match
            if depth >= self.max_depth:
                raise FormulaDepthError(
                    f"Formula applications nested deeper than {self.max_depth} at {format_expr(e)}",
                    expression=e, signature=sig, path=path)
            error = substitute(formula.error, bindings)
            self.errors.append(ErrorAnnotation(formula.id, error))
            if formula.validity is not None:
                predicate = substitute(formula.validity, bindings)
                if free_variables(predicate):
                    self.assumptions.append(Assumption(formula.id, predicate))
            logger.debug(f"Approximating {format_expr(e)} with formula {formula.id}")
            inner = self.compose(substitute(formula.rhs, bindings),
                                 path + (formula.id,), depth + 1)
            return Approx(formula.id, e, error, inner)

        numeric = find_best_numeric(self.reg, sig)
        if numeric is not None:
            return NumericInvoke(numeric.id, numeric.impl, str(numeric.complexity),
                                 self._children(sig, children, path, depth))

        # report the leftmost-innermost uncoverable description
        self._children(sig, children, path, depth)
        raise CompositionError(f"No service, formula or numeric method covers {sig} "
                               f"in {format_expr(e)}",
                               expression=e, signature=sig, path=path)

    def _children(self, sig, children, path, depth) -> Tuple[PlanNode, ...]:
        return tuple(self.compose(child, path + (f"{sig}:{index + 1}",), depth)
                     for index, child in enumerate(children))


@log_execution_time
def compose(e: Union[str, Expr], reg: Registry,
            max_formula_depth: int = DEFAULT_MAX_FORMULA_DEPTH) -> Plan:
    """
    Build an executable plan for a semantic description.

    Args:
        e: Expression (or its text) without pattern variables
        reg: Loaded registry
        max_formula_depth: Nested formula applications allowed per path

    Returns:
        Plan with error annotations and validity assumptions in construction order

    Raises:
        CompositionError: Some sub-description cannot be covered
        FormulaDepthError: Formula rewriting does not terminate within the cap
    """
    expr = parse(e) if isinstance(e, str) else e
    composer = _Composer(reg, max_formula_depth)
    root = composer.compose(expr)
    plan = Plan(root, tuple(composer.errors), tuple(composer.assumptions))
    logger.info(f"Composed plan for {format_expr(expr)}: {count_nodes(plan.root)} nodes, "
                f"{len(plan.errors)} approximations")
    return plan


def count_nodes(node: PlanNode) -> int:
    if isinstance(node, (Invoke, NumericInvoke)):
        return 1 + sum(count_nodes(child) for child in node.args)
    if isinstance(node, Approx):
        return 1 + count_nodes(node.inner)
    return 1


def plan_services(node: PlanNode) -> List[str]:
    """Service ids invoked by a plan, in evaluation order."""
    if isinstance(node, (Invoke, NumericInvoke)):
        ids = [s for child in node.args for s in plan_services(child)]
        return ids + [node.service]
    if isinstance(node, Approx):
        return plan_services(node.inner)
    return []


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------

def _execute(node: PlanNode, bindings: Mapping[str, float], path: Tuple[str, ...]) -> float:
    here = '/'.join(path) or 'root'
    try:
        if isinstance(node, LeafNumber):
            return float(node.text)
        if isinstance(node, LeafVar):
            if node.name not in bindings:
                raise PlanExecutionError(f"Unbound variable {node.name} at {here}",
                                         {'path': here, 'variable': node.name})
            return float(bindings[node.name])
        if isinstance(node, (Invoke, NumericInvoke)):
            values = [_execute(child, bindings, path + (f"{node.service}:{index + 1}",))
                      for index, child in enumerate(node.args)]
            return evaluate(node.impl, dict(zip(parameter_names(len(values)), values)))
        if isinstance(node, Approx):
            return _execute(node.inner, bindings, path + (node.formula,))
    except EvaluationError as e:
        raise PlanExecutionError(f"Evaluation failed at {here}: {e.message}",
                                 {'path': here}) from e
    raise PlanExecutionError(f"Unknown plan node at {here}: {node!r}", {'path': here})


def check_assumptions(plan: Plan, bindings: Mapping[str, float]) -> List[Assumption]:
    """Assumptions that are violated or cannot be evaluated at the bindings."""
    violated = []
    for assumption in plan.assumptions:
        try:
            holds = evaluate(assumption.validity, bindings) > 0
        except EvaluationError:
            holds = False
        if not holds:
            violated.append(assumption)
    return violated


def execute_plan(plan: Plan, bindings: Mapping[str, float], strict: bool = False) -> float:
    """
    Evaluate a plan bottom-up at the given variable values.

    Invoke and NumericInvoke nodes evaluate their implementation with p1..pArity
    bound to the child results; Approx nodes evaluate their inner plan.

    Args:
        plan: Composed plan
        bindings: Variable values
        strict: Raise instead of warning when a validity assumption fails

    Raises:
        PlanExecutionError: A node fails to evaluate (message names the node path)
    """
    for assumption in check_assumptions(plan, bindings):
        message = (f"Validity of formula {assumption.formula} not established: "
                   f"{format_expr(assumption.validity)} > 0")
        if strict:
            raise PlanExecutionError(message, {'formula': assumption.formula})
        logger.warning(message)
    return _execute(plan.root, bindings, ())


def error_bounds(plan: Plan, bindings: Mapping[str, float]) -> List[Tuple[str, Optional[float]]]:
    """Each error annotation evaluated at the bindings; None where not evaluable."""
    bounds = []
    for annotation in plan.errors:
        try:
            bounds.append((annotation.formula, evaluate(annotation.error, bindings)))
        except EvaluationError:
            bounds.append((annotation.formula, None))
    return bounds


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def node_to_dict(node: PlanNode) -> Dict[str, Any]:
    if isinstance(node, LeafNumber):
        return {'num': node.text}
    if isinstance(node, LeafVar):
        return {'var': node.name}
    if isinstance(node, Invoke):
        return {'invoke': node.service, 'impl': format_expr(node.impl),
                'args': [node_to_dict(child) for child in node.args]}
    if isinstance(node, NumericInvoke):
        return {'numeric': node.service, 'impl': format_expr(node.impl),
                'complexity': node.complexity,
                'args': [node_to_dict(child) for child in node.args]}
    if isinstance(node, Approx):
        return {'approx': format_expr(node.source), 'formula': node.formula,
                'error': format_expr(node.error), 'inner': node_to_dict(node.inner)}
    raise TypeError(f"Not a plan node: {node!r}")


def plan_to_dict(plan: Plan) -> Dict[str, Any]:
    return {
        'root': node_to_dict(plan.root),
        'errors': [{'formula': a.formula, 'error': format_expr(a.error)} for a in plan.errors],
        'assumptions': [{'formula': a.formula, 'validity': format_expr(a.validity)}
                        for a in plan.assumptions],
    }


def emit_plan(plan: Plan, indent: Optional[int] = 2) -> str:
    """JSON rendering of a plan with sorted keys."""
    return json.dumps(plan_to_dict(plan), indent=indent, sort_keys=True)


def _field(data: Dict[str, Any], key: str, kind=str):
    if not isinstance(data, dict):
        raise PlanFormatError("Plan entry must be a JSON object", {'entry': data})
    value = data.get(key)
    if not isinstance(value, kind):
        raise PlanFormatError(f"Plan node field {key!r} missing or malformed", {'node': data})
    return value


def _expr_field(data: Dict[str, Any], key: str) -> Expr:
    try:
        return parse(_field(data, key))
    except ExpressionError as e:
        raise PlanFormatError(f"Plan node field {key!r}: {e}", {'node': data}) from e


def node_from_dict(data: Any) -> PlanNode:
    if not isinstance(data, dict):
        raise PlanFormatError("Plan node must be a JSON object", {'node': data})
    if 'num' in data:
        return LeafNumber(_field(data, 'num'))
    if 'var' in data:
        return LeafVar(_field(data, 'var'))
    if 'invoke' in data:
        args = tuple(node_from_dict(a) for a in _field(data, 'args', list))
        return Invoke(_field(data, 'invoke'), _expr_field(data, 'impl'), args)
    if 'numeric' in data:
        args = tuple(node_from_dict(a) for a in _field(data, 'args', list))
        return NumericInvoke(_field(data, 'numeric'), _expr_field(data, 'impl'),
                             _field(data, 'complexity'), args)
    if 'approx' in data:
        return Approx(_field(data, 'formula'), _expr_field(data, 'approx'),
                      _expr_field(data, 'error'), node_from_dict(data.get('inner')))
    raise PlanFormatError("Unrecognized plan node", {'keys': sorted(data)})


def read_plan(text: str) -> Plan:
    """Parse JSON produced by emit_plan back into a Plan."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise PlanFormatError(f"Invalid plan JSON: {e}") from e
    if not isinstance(data, dict) or 'root' not in data:
        raise PlanFormatError("Plan JSON must be an object with a 'root' node")
    errors = tuple(ErrorAnnotation(_field(a, 'formula'), _expr_field(a, 'error'))
                   for a in data.get('errors', []))
    assumptions = tuple(Assumption(_field(a, 'formula'), _expr_field(a, 'validity'))
                        for a in data.get('assumptions', []))
    return Plan(node_from_dict(data['root']), errors, assumptions)
