"""
Expression language for semantic descriptions, formulas and complexity functions.

This module implements:
- An immutable AST (numbers, variables, unary/binary operators, calls,
  pattern variables)
- A recursive-descent parser and a minimal-parenthesis printer
- Evaluation in the linear domain and in the logarithmic domain
- Root pattern matching, substitution and top-level decomposition

Grammar (whitespace insignificant):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | IDENT | '?' IDENT | IDENT '(' expr (',' expr)* ')'
            | '(' expr ')'

`^` binds tighter than unary minus and is right-associative.
"""

import logging
import math
import re
import sys
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, List, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy import special

from ..utils.exceptions import (
    ArityError,
    EvaluationDomainError,
    EvaluationError,
    EvaluationOverflowError,
    ExpressionSyntaxError,
    SubstitutionError,
    UnboundVariableError,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

class Expr:
    """Base class of all expression nodes. Nodes are immutable and hashable."""

    __slots__ = ()

    def children(self) -> Tuple['Expr', ...]:
        return ()

    def __str__(self) -> str:
        return format_expr(self)


@dataclass(frozen=True)
class Number(Expr):
    """Decimal literal; keeps its source text."""
    text: str

    @property
    def value(self) -> float:
        return float(self.text)

    @classmethod
    def of(cls, value: Union[int, float]) -> 'Number':
        """Build a literal from a non-negative Python number."""
        if value < 0:
            raise ValueError("literals are non-negative; wrap in Unary('-', ...)")
        if float(value).is_integer() and abs(value) < 1e16:
            return cls(str(int(value)))
        return cls(repr(float(value)))


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class PatternVar(Expr):
    """Pattern variable, spelled `?name`; only legal in formula templates."""
    name: str


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    operand: Expr

    def children(self) -> Tuple[Expr, ...]:
        return (self.operand,)


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def children(self) -> Tuple[Expr, ...]:
        return (self.left, self.right)


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: Tuple[Expr, ...]

    def children(self) -> Tuple[Expr, ...]:
        return self.args


Bindings = Dict[str, Expr]

BINARY_OPERATORS = ('+', '-', '*', '/', '^')

# name -> arity
BUILTINS: Dict[str, int] = {
    'sin': 1, 'cos': 1, 'exp': 1, 'ln': 1, 'log2': 1, 'sqrt': 1, 'abs': 1,
    'floor': 1, 'ceil': 1, 'min': 2, 'max': 2, 'mod': 2, 'factorial': 1,
}


@dataclass(frozen=True)
class Signature:
    """Operation name plus arity, e.g. `+/2` or `sin/1`."""
    name: str
    arity: int

    @property
    def is_leaf(self) -> bool:
        return self == LEAF

    @classmethod
    def parse(cls, text: str) -> 'Signature':
        name, sep, arity = text.rpartition('/')
        if not sep or not name or not arity.isdigit():
            raise ValueError(f"Malformed signature: {text!r}")
        return cls(name, int(arity))

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"


LEAF = Signature('<leaf>', 0)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),?])
""", re.VERBOSE)


class _Token(NamedTuple):
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ExpressionSyntaxError(
                f"Unexpected character {text[pos]!r}",
                offset=len(text[:pos].encode('utf-8')),
                expected="number, identifier, operator or parenthesis",
            )
        kind = match.lastgroup
        if kind != 'ws':
            tokens.append(_Token(kind, match.group(), pos))
        pos = match.end()
    tokens.append(_Token('end', '', len(text)))
    return tokens


class _Parser:
    """Recursive-descent parser over a token list."""

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.index = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def _error(self, expected: str) -> ExpressionSyntaxError:
        token = self.current
        found = repr(token.text) if token.kind != 'end' else 'end of input'
        return ExpressionSyntaxError(
            f"Expected {expected} but found {found}",
            offset=len(self.text[:token.pos].encode('utf-8')),
            expected=expected,
        )

    def _accept(self, text: str) -> bool:
        if self.current.kind == 'op' and self.current.text == text:
            self.index += 1
            return True
        return False

    def _expect(self, text: str) -> None:
        if not self._accept(text):
            raise self._error(repr(text))

    def parse(self) -> Expr:
        node = self.expr()
        if self.current.kind != 'end':
            raise self._error("operator or end of input")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.current.kind == 'op' and self.current.text in ('+', '-'):
            op = self.current.text
            self.index += 1
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.current.kind == 'op' and self.current.text in ('*', '/'):
            op = self.current.text
            self.index += 1
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self._accept('-'):
            return Unary('-', self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self._accept('^'):
            return Binary('^', base, self.unary())
        return base

    def atom(self) -> Expr:
        token = self.current
        if token.kind == 'number':
            self.index += 1
            return Number(token.text)
        if token.kind == 'ident':
            self.index += 1
            if self._accept('('):
                args = [self.expr()]
                while self._accept(','):
                    args.append(self.expr())
                self._expect(')')
                return _make_call(token.text, tuple(args))
            return Var(token.text)
        if self._accept('?'):
            if self.current.kind != 'ident':
                raise self._error("pattern variable name")
            name = self.current.text
            self.index += 1
            return PatternVar(name)
        if self._accept('('):
            node = self.expr()
            self._expect(')')
            return node
        raise self._error("number, identifier, '?name' or '('")


def _make_call(name: str, args: Tuple[Expr, ...]) -> Call:
    expected = BUILTINS.get(name)
    if expected is not None and expected != len(args):
        raise ArityError(
            f"Builtin {name} takes {expected} argument(s), got {len(args)}",
            {'function': name, 'expected': expected, 'actual': len(args)},
        )
    return Call(name, args)


def parse(text: str) -> Expr:
    """
    Parse the concrete syntax of an expression.

    Args:
        text: Expression source, e.g. "n*log2(n)" or "sin(?x)"

    Returns:
        Expression AST

    Raises:
        ExpressionSyntaxError: On malformed input (with byte offset and hint)
        ArityError: When a builtin is called with the wrong number of arguments
    """
    if not text or not text.strip():
        raise ExpressionSyntaxError("Empty expression", offset=0, expected="expression")
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5
_BINARY_PREC = {'+': _PREC_ADD, '-': _PREC_ADD, '*': _PREC_MUL, '/': _PREC_MUL, '^': _PREC_POW}


def _precedence(e: Expr) -> int:
    if isinstance(e, Binary):
        return _BINARY_PREC[e.op]
    if isinstance(e, Unary):
        return _PREC_UNARY
    return _PREC_ATOM


def _wrap(e: Expr, minimum: int) -> str:
    text = format_expr(e)
    return f"({text})" if _precedence(e) < minimum else text


def format_expr(e: Expr) -> str:
    """Render an expression with minimal parentheses and canonical spacing."""
    if isinstance(e, Number):
        return e.text
    if isinstance(e, Var):
        return e.name
    if isinstance(e, PatternVar):
        return f"?{e.name}"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, Unary):
        return f"{e.op}{_wrap(e.operand, _PREC_UNARY)}"
    if isinstance(e, Binary):
        if e.op == '^':
            return f"{_wrap(e.left, _PREC_ATOM)}^{_wrap(e.right, _PREC_UNARY)}"
        prec = _BINARY_PREC[e.op]
        left = _wrap(e.left, prec)
        right = _wrap(e.right, prec + 1)
        if e.op in ('+', '-'):
            return f"{left} {e.op} {right}"
        return f"{left}{e.op}{right}"
    raise TypeError(f"Not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# Structural queries
# ---------------------------------------------------------------------------

def free_variables(e: Expr) -> FrozenSet[str]:
    """Names of all Var nodes in `e`."""
    if isinstance(e, Var):
        return frozenset((e.name,))
    result = frozenset()
    for child in e.children():
        result |= free_variables(child)
    return result


def pattern_variables(e: Expr) -> FrozenSet[str]:
    """Names of all PatternVar nodes in `e`."""
    if isinstance(e, PatternVar):
        return frozenset((e.name,))
    result = frozenset()
    for child in e.children():
        result |= pattern_variables(child)
    return result


def decompose_top(e: Expr) -> Tuple[Signature, Tuple[Expr, ...]]:
    """
    Split an expression at its root operation.

    Returns:
        (signature, children); leaves yield (LEAF, ())
    """
    if isinstance(e, (Number, Var, PatternVar)):
        return LEAF, ()
    if isinstance(e, Unary):
        return Signature(e.op, 1), (e.operand,)
    if isinstance(e, Binary):
        return Signature(e.op, 2), (e.left, e.right)
    if isinstance(e, Call):
        return Signature(e.name, len(e.args)), e.args
    raise TypeError(f"Not an expression node: {e!r}")


def rebuild(e: Expr, children: Tuple[Expr, ...]) -> Expr:
    """Same root as `e` with new children."""
    if isinstance(e, Unary):
        return Unary(e.op, children[0])
    if isinstance(e, Binary):
        return Binary(e.op, children[0], children[1])
    if isinstance(e, Call):
        return Call(e.name, tuple(children))
    return e


# ---------------------------------------------------------------------------
# Pattern matching and substitution
# ---------------------------------------------------------------------------

def match_pattern(pattern: Expr, subject: Expr) -> Optional[Bindings]:
    """
    Match `pattern` against `subject` at the root.

    A PatternVar matches any subexpression; repeated pattern variables must
    bind structurally equal subexpressions.

    Returns:
        Bindings on success, None on no-match
    """
    bindings: Bindings = {}
    return bindings if _match(pattern, subject, bindings) else None


def _match(pattern: Expr, subject: Expr, bindings: Bindings) -> bool:
    if isinstance(pattern, PatternVar):
        bound = bindings.get(pattern.name)
        if bound is None:
            bindings[pattern.name] = subject
            return True
        return bound == subject
    if type(pattern) is not type(subject):
        return False
    if isinstance(pattern, (Number, Var)):
        return pattern == subject
    if isinstance(pattern, Unary):
        return pattern.op == subject.op and _match(pattern.operand, subject.operand, bindings)
    if isinstance(pattern, Binary):
        return (pattern.op == subject.op
                and _match(pattern.left, subject.left, bindings)
                and _match(pattern.right, subject.right, bindings))
    if isinstance(pattern, Call):
        if pattern.name != subject.name or len(pattern.args) != len(subject.args):
            return False
        return all(_match(p, s, bindings) for p, s in zip(pattern.args, subject.args))
    return False


def substitute(template: Expr, bindings: Mapping[str, Expr]) -> Expr:
    """
    Replace every PatternVar in `template` by its binding.

    Raises:
        SubstitutionError: If a pattern variable is unbound
    """
    if isinstance(template, PatternVar):
        try:
            return bindings[template.name]
        except KeyError:
            raise SubstitutionError(
                f"Unbound pattern variable ?{template.name}",
                {'variable': template.name},
            ) from None
    children = template.children()
    if not children:
        return template
    return rebuild(template, tuple(substitute(c, bindings) for c in children))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

class EvalMode(Enum):
    LINEAR = 'linear'
    LOG = 'log'


class _Dual(NamedTuple):
    """Value of a subexpression in both domains.

    lin is None when the magnitude overflowed the float range; log is None when
    the value is not positive (or unknown).
    """
    lin: Optional[float]
    log: Optional[float]


_LN2 = math.log(2.0)
_MIN_NORMAL = sys.float_info.min
# beyond this every float is an integer
_INTEGRAL_LOG = 53 * _LN2
_LOG_MIN_NORMAL = math.log(_MIN_NORMAL)
_LOG_MAX = math.log(sys.float_info.max)


def _finite(value: float) -> Optional[float]:
    if math.isnan(value):
        raise EvaluationDomainError("Result is not a number")
    return None if math.isinf(value) else value


def _usable(lin: Optional[float]) -> bool:
    return lin is not None and lin >= _MIN_NORMAL


def _dual(lin: Optional[float], log: Optional[float] = None) -> _Dual:
    """Combine a linear value with a rule-derived log, preferring ln(lin)."""
    if _usable(lin):
        return _Dual(lin, math.log(lin))
    if lin is not None and lin < 0:
        return _Dual(lin, None)
    if lin is None and log is None:
        raise EvaluationOverflowError(
            "Value overflows in both the linear and the log domain")
    if lin is None and log < _LOG_MIN_NORMAL:
        lin = 0.0
    elif lin is None and log < _LOG_MAX:
        # quotient or difference of overflowed operands back in range
        lin = math.exp(log)
    return _Dual(lin, log)


def _need_lin(d: _Dual, what: str) -> float:
    if d.lin is None:
        raise EvaluationOverflowError(f"Operand of {what} overflows the float range")
    return d.lin


def _log_add(a: _Dual, b: _Dual) -> Optional[float]:
    if a.log is not None and b.log is not None:
        return float(np.logaddexp(a.log, b.log))
    big, small = (a, b) if a.lin is None else (b, a)
    if big.lin is None and big.log is not None and small.lin is not None:
        scaled = small.lin * math.exp(-big.log)
        if scaled > -1.0:
            return big.log + math.log1p(scaled)
    return None


def _log_sub(a: _Dual, b: _Dual) -> Optional[float]:
    if a.log is not None and b.log is not None:
        if a.log <= b.log:
            return None
        return a.log + float(np.log1p(-np.exp(b.log - a.log)))
    if a.lin is None and a.log is not None and b.lin is not None:
        scaled = -b.lin * math.exp(-a.log)
        if scaled > -1.0:
            return a.log + math.log1p(scaled)
    return None


def _eval_binary(op: str, a: _Dual, b: _Dual) -> _Dual:
    if op == '+':
        lin = _finite(a.lin + b.lin) if a.lin is not None and b.lin is not None else None
        return _dual(lin, None if _usable(lin) else _log_add(a, b))
    if op == '-':
        lin = _finite(a.lin - b.lin) if a.lin is not None and b.lin is not None else None
        return _dual(lin, None if _usable(lin) else _log_sub(a, b))
    if op == '*':
        lin = _finite(a.lin * b.lin) if a.lin is not None and b.lin is not None else None
        log = a.log + b.log if a.log is not None and b.log is not None else None
        return _dual(lin, log)
    if op == '/':
        if b.lin == 0.0 and b.log is None:
            raise EvaluationDomainError("Division by zero")
        if a.lin is not None and b.lin is not None and b.lin != 0.0:
            lin = _finite(a.lin / b.lin)
        elif a.lin is not None and b.lin is None:
            lin = 0.0
        else:
            lin = None
        log = a.log - b.log if a.log is not None and b.log is not None else None
        return _dual(lin, log)
    if op == '^':
        exponent = _need_lin(b, "^ (exponent)")
        lin = None
        if a.lin is not None:
            try:
                result = a.lin ** exponent
            except OverflowError:
                result = None
            except ZeroDivisionError:
                raise EvaluationDomainError("Zero raised to a negative power") from None
            if isinstance(result, complex):
                raise EvaluationDomainError("Negative base with fractional exponent")
            lin = _finite(result) if result is not None else None
        log = exponent * a.log if a.log is not None else None
        return _dual(lin, log)
    raise EvaluationError(f"Unknown operator {op!r}")


def _factorial(a: _Dual) -> _Dual:
    x = _need_lin(a, "factorial")
    if x < 0:
        raise EvaluationDomainError("factorial of a negative value")
    log = float(special.gammaln(x + 1.0))
    if x.is_integer() and x <= 170:
        lin = float(math.factorial(int(x)))
    elif x < 170.6:
        lin = float(special.gamma(x + 1.0))
    else:
        lin = None
    return _dual(lin, log)


def _eval_call(name: str, args: List[_Dual]) -> _Dual:
    if name not in BUILTINS:
        raise EvaluationError(f"No evaluation rule for function {name!r}",
                              {'function': name})
    if name == 'factorial':
        return _factorial(args[0])
    if name in ('min', 'max'):
        a, b = args
        if a.lin is not None and b.lin is not None:
            return _dual(min(a.lin, b.lin) if name == 'min' else max(a.lin, b.lin))
        # at least one operand is beyond the float range
        if a.log is None and b.log is None:
            raise EvaluationOverflowError(f"Operands of {name} overflow the float range")
        if a.log is None or b.log is None:
            huge, other = (a, b) if a.lin is None else (b, a)
            if huge.log is None:
                # a huge negative operand
                return huge if name == 'min' else other
            return huge if name == 'max' else other
        pick_a = (a.log >= b.log) == (name == 'max')
        return a if pick_a else b
    a = args[0]
    if name == 'ln':
        if a.log is None:
            raise EvaluationDomainError("ln of a non-positive value")
        return _dual(a.log, math.log(a.log) if a.log > 0 else None)
    if name == 'log2':
        if a.log is None:
            raise EvaluationDomainError("log2 of a non-positive value")
        value = a.log / _LN2
        return _dual(value, math.log(value) if value > 0 else None)
    if name == 'exp':
        x = _need_lin(a, "exp")
        try:
            lin = math.exp(x)
        except OverflowError:
            lin = None
        return _dual(lin, x)
    if name == 'sqrt':
        if a.lin is not None and a.lin < 0:
            raise EvaluationDomainError("sqrt of a negative value")
        lin = math.sqrt(a.lin) if a.lin is not None else None
        return _dual(lin, a.log / 2.0 if a.log is not None else None)
    if name == 'abs':
        if a.lin is not None:
            return _dual(abs(a.lin), a.log)
        if a.log is None:
            raise EvaluationOverflowError("Operand of abs overflows the float range")
        return a
    if name in ('floor', 'ceil'):
        if a.lin is None:
            if a.log is not None and a.log > _INTEGRAL_LOG:
                return a
            raise EvaluationOverflowError(f"Operand of {name} overflows the float range")
        return _dual(float(math.floor(a.lin) if name == 'floor' else math.ceil(a.lin)))
    if name == 'sin':
        return _dual(math.sin(_need_lin(a, "sin")))
    if name == 'cos':
        return _dual(math.cos(_need_lin(a, "cos")))
    if name == 'mod':
        x, m = _need_lin(a, "mod"), _need_lin(args[1], "mod")
        if m == 0.0:
            raise EvaluationDomainError("mod by zero")
        return _dual(x % m)
    raise EvaluationError(f"No evaluation rule for function {name!r}")


def _evaluate(e: Expr, bindings: Mapping[str, float]) -> _Dual:
    if isinstance(e, Number):
        return _dual(_finite(e.value))
    if isinstance(e, Var):
        try:
            value = float(bindings[e.name])
        except KeyError:
            raise UnboundVariableError(f"Unbound variable {e.name}",
                                       {'variable': e.name}) from None
        return _dual(_finite(value))
    if isinstance(e, Binary):
        return _eval_binary(e.op, _evaluate(e.left, bindings), _evaluate(e.right, bindings))
    if isinstance(e, Unary):
        a = _evaluate(e.operand, bindings)
        if a.lin is None:
            raise EvaluationOverflowError("Negated operand overflows the float range")
        return _dual(-a.lin)
    if isinstance(e, Call):
        return _eval_call(e.name, [_evaluate(arg, bindings) for arg in e.args])
    if isinstance(e, PatternVar):
        raise EvaluationError(f"Cannot evaluate pattern variable ?{e.name}")
    raise TypeError(f"Not an expression node: {e!r}")


def evaluate(e: Expr, bindings: Mapping[str, float],
             mode: EvalMode = EvalMode.LINEAR) -> float:
    """
    Evaluate an expression.

    Args:
        e: Expression without pattern variables
        bindings: Values of the free variables
        mode: LINEAR returns the value; LOG returns its natural logarithm

    Returns:
        The value (LINEAR) or ln of the value (LOG)

    Raises:
        UnboundVariableError: A free variable has no binding
        EvaluationDomainError: ln of a non-positive value, division by zero, ...
        EvaluationOverflowError: Linear result leaves the float range (use LOG)
    """
    result = _evaluate(e, bindings)
    if mode is EvalMode.LINEAR:
        if result.lin is None:
            raise EvaluationOverflowError(
                "Value overflows the float range; evaluate in log mode",
                {'expression': format_expr(e)})
        return result.lin
    if result.log is None:
        if result.lin is not None:
            raise EvaluationDomainError(
                "Logarithm of a non-positive value",
                {'expression': format_expr(e), 'value': result.lin})
        raise EvaluationOverflowError("Value overflows the log domain")
    return result.log
