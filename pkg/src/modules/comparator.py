"""
Approximate black-box comparison of complexity functions.

Given two positive growth functions f1, f2 on [1, inf) the comparator decides
one of four outcomes:

- <1> EQUIVALENT      f1 and f2 agree up to a constant factor
- <2> FIRST_SMALLER   f1 grows strictly slower than f2
- <3> SECOND_SMALLER  f2 grows strictly slower than f1
- <4> INCONCLUSIVE    none of the above could be established

The procedure only evaluates the functions. It first sweeps past the largest
sign change of ldif = ln f1 - ln f2 and of its finite-difference derivatives
(root localization by doubling and bisection), then estimates the limit of
f1/f2 along a geometric sequence starting beyond that point, in both
directions.

The procedure is a heuristic: functions with infinitely many crossings, or
whose ratio oscillates, may be misclassified.
"""

import logging
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Set, Tuple, Union

import numpy as np

from .expression import EvalMode, Expr, Binary, Number, evaluate, format_expr, parse
from ..utils.exceptions import (
    BracketError,
    ComparatorError,
    ConfigurationError,
    EvaluationDomainError,
    EvaluationError,
    EvaluationOverflowError,
    ExpressionError,
)
from ..utils.validators import validate_closed_expression, validate_comparator_settings

logger = logging.getLogger(__name__)

VARIABLE = 'n'

# relative rounding of one ldif evaluation, in units of machine epsilon
_ROUNDOFF_FACTOR = 32.0
_EPS = sys.float_info.epsilon


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparatorConfig:
    """
    Tuning knobs of the comparator.

    Attributes:
        q: Ratio of the geometric sampling sequence nv(i) = q * nv(i-1)
        k: Window of consecutive ratios that must agree within epsilon
        epsilon: Convergence tolerance on ratios
        max_samples: L, the number of ratio samples before giving up
        tmax: Number of xmax doublings in the root sweep
        pmax: Highest derivative order tested in the root sweep
        fd_step: Relative step of the forward differences
        zero_tol: Absolute zero tolerance of root tests
        bisect_tol: Relative bracket width at which bisection stops
        zero_samples: Samples used to detect an identically zero derivative
        max_roots: Located roots after which the sweep gives up
        skip_cap: Unit steps the skip loop may take past flat points
        flat_cap: Consecutive flat unit steps after which a derivative order
            (p >= 1) is retired from the root tests
        bisect_max_iter: Iteration cap of one bisection
        overflow_log_ratio: ln-ratio above which the ratio counts as infinite
    """
    q: int = 2
    k: int = 4
    epsilon: float = 1e-3
    max_samples: int = 64
    tmax: int = 60
    pmax: int = 2
    fd_step: float = 1e-6
    zero_tol: float = 1e-12
    bisect_tol: float = 1e-9
    zero_samples: int = 16
    max_roots: int = 256
    skip_cap: int = 10_000
    flat_cap: int = 8
    bisect_max_iter: int = 200
    overflow_log_ratio: float = 700.0

    def __post_init__(self):
        result = validate_comparator_settings(self)
        if not result['valid']:
            raise ConfigurationError("Invalid comparator configuration",
                                     {'issues': result['issues']})

    @classmethod
    def from_config(cls, config) -> 'ComparatorConfig':
        """Build from the 'comparator' section of a Config."""
        section = config.get_comparator_config()
        known = {name for name in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in section.items() if k in known})

    def with_overrides(self, **overrides) -> 'ComparatorConfig':
        """Copy with the given fields replaced; None values are ignored."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes) if changes else self

    def widened(self, samples_factor: int = 4, epsilon_divisor: float = 10.0) -> 'ComparatorConfig':
        """Configuration of the refinement comparator: more samples, tighter epsilon."""
        return replace(self, max_samples=self.max_samples * samples_factor,
                       epsilon=self.epsilon / epsilon_divisor)

    def sweep_budget(self) -> int:
        """Upper bound on the derivative evaluations of one root sweep."""
        orders = self.pmax + 1
        per_segment = ((self.skip_cap + 1) * orders
                       + self.zero_samples * orders
                       + (self.tmax + 2) * orders
                       + self.bisect_max_iter + 2)
        return self.zero_samples * orders + (self.max_roots + 1) * per_segment

    def to_dict(self) -> Dict[str, Union[int, float]]:
        return asdict(self)


# ---------------------------------------------------------------------------
# Complexity functions
# ---------------------------------------------------------------------------

def _log_of_body(body: Expr, x: float) -> float:
    return evaluate(body, {VARIABLE: x}, EvalMode.LOG)


@dataclass(frozen=True)
class ComplexityFn:
    """
    Positive growth function of the problem size n on [1, inf).

    Built either from an expression in n or from a callable returning ln f(x).
    """
    name: str
    body: Optional[Expr] = None
    log_fn: Callable[[float], float] = field(default=None, repr=False, compare=False)

    @classmethod
    def from_expr(cls, source: Union[str, Expr], name: Optional[str] = None) -> 'ComplexityFn':
        body = parse(source) if isinstance(source, str) else source
        check = validate_closed_expression(body, (VARIABLE,))
        if not check['valid']:
            raise ExpressionError(f"Not a complexity function of {VARIABLE}: {format_expr(body)}",
                                  {'issues': check['issues']})
        return cls(name or format_expr(body), body, lambda x, _b=body: _log_of_body(_b, x))

    @classmethod
    def from_callable(cls, name: str, log_fn: Callable[[float], float]) -> 'ComplexityFn':
        return cls(name, None, log_fn)

    def log_value(self, x: float) -> float:
        """ln f(x); raises EvaluationDomainError where f is not positive."""
        value = float(self.log_fn(x))
        if math.isnan(value) or value == -math.inf:
            raise EvaluationDomainError(f"{self.name} is not positive at {x}")
        return value

    def value(self, x: float) -> float:
        """f(x) in the linear domain."""
        if self.body is not None:
            return evaluate(self.body, {VARIABLE: x}, EvalMode.LINEAR)
        try:
            return math.exp(self.log_value(x))
        except OverflowError:
            raise EvaluationOverflowError(f"{self.name} overflows the float range at {x}") from None

    def scaled(self, factor: float) -> 'ComplexityFn':
        """factor * f, for positive factor."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        if self.body is not None:
            return ComplexityFn.from_expr(Binary('*', Number.of(factor), self.body))
        shift = math.log(factor)
        return ComplexityFn.from_callable(f"{factor}*{self.name}",
                                          lambda x: shift + self.log_value(x))

    def __str__(self) -> str:
        return self.name


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

class CompOutcome(Enum):
    EQUIVALENT = 1
    FIRST_SMALLER = 2
    SECOND_SMALLER = 3
    INCONCLUSIVE = 4

    @property
    def label(self) -> str:
        return f"<{self.value}>"

    def swapped(self) -> 'CompOutcome':
        if self is CompOutcome.FIRST_SMALLER:
            return CompOutcome.SECOND_SMALLER
        if self is CompOutcome.SECOND_SMALLER:
            return CompOutcome.FIRST_SMALLER
        return self

    def __str__(self) -> str:
        return f"{self.name} ({self.label})"


class LimitKind(Enum):
    BOUNDED = 'bounded'
    DIVERGENT = 'divergent'
    INCONCLUSIVE = 'inconclusive'


def _json_float(value: float) -> Union[float, str]:
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return value


@dataclass(frozen=True)
class LimitEstimate:
    """Outcome of one ratio-limit estimation; `value` is the last ratio when bounded."""
    kind: LimitKind
    value: Optional[float]
    samples: Tuple[Tuple[float, float], ...] = ()

    def to_dict(self) -> Dict:
        return {
            'kind': self.kind.value,
            'value': None if self.value is None else _json_float(self.value),
            'samples': [[_json_float(n), _json_float(r)] for n, r in self.samples],
        }


@dataclass(frozen=True)
class RootRecord:
    order: int
    position: float


@dataclass
class ComparisonTrace:
    """Diagnostic record of one comparison; confined to a single call."""
    start: Optional[float] = None
    roots: List[RootRecord] = field(default_factory=list)
    zero_orders: List[int] = field(default_factory=list)
    suspended_orders: List[int] = field(default_factory=list)
    forward: Optional[LimitEstimate] = None
    backward: Optional[LimitEstimate] = None
    sweep_evaluations: int = 0
    ratio_evaluations: int = 0
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            'start': self.start,
            'roots': [{'order': r.order, 'position': r.position} for r in self.roots],
            'zero_orders': list(self.zero_orders),
            'suspended_orders': list(self.suspended_orders),
            'forward': self.forward.to_dict() if self.forward else None,
            'backward': self.backward.to_dict() if self.backward else None,
            'sweep_evaluations': self.sweep_evaluations,
            'ratio_evaluations': self.ratio_evaluations,
            'notes': list(self.notes),
        }


@dataclass(frozen=True)
class CompResult:
    outcome: CompOutcome
    trace: ComparisonTrace = field(compare=False)

    @property
    def code(self) -> int:
        return self.outcome.value

    def to_dict(self) -> Dict:
        return {
            'result': self.outcome.name,
            'code': self.code,
            'trace': self.trace.to_dict(),
        }


# ---------------------------------------------------------------------------
# Numerical building blocks
# ---------------------------------------------------------------------------

def ldif(f1: ComplexityFn, f2: ComplexityFn, x: float) -> float:
    """
    ln f1(x) - ln f2(x); same sign and zeros as f1(x) - f2(x).

    Raises:
        ComparatorError: x < 1
        EvaluationError: either function cannot be evaluated at x
    """
    if x < 1:
        raise ComparatorError(f"ldif is defined on [1, inf), got {x}")
    return f1.log_value(x) - f2.log_value(x)


def fd_derivative(d: Callable[[float], float], p: int, x: float,
                  cfg: Optional[ComparatorConfig] = None) -> float:
    """
    p-th nested forward difference of `d` at x with step fd_step*max(1, |x|).

    Args:
        d: Real function
        p: Derivative order, 0..pmax
        x: Evaluation point
        cfg: Comparator configuration (defaults when omitted)

    Returns:
        d(x) for p = 0, otherwise (fd(p-1, x+h) - fd(p-1, x)) / h
    """
    cfg = cfg or DEFAULT_CONFIG
    if p < 0 or p > cfg.pmax:
        raise ComparatorError(f"derivative order {p} outside 0..{cfg.pmax}")
    if p == 0:
        return d(x)
    h = cfg.fd_step * max(1.0, abs(x))
    return (fd_derivative(d, p - 1, x + h, cfg) - fd_derivative(d, p - 1, x, cfg)) / h


def _sign(value: float, tol: float) -> int:
    if abs(value) <= tol:
        return 0
    return 1 if value > 0 else -1


def bisect_root(d: Callable[[float], float], a: float, b: float,
                cfg: Optional[ComparatorConfig] = None,
                zero_tol: Optional[float] = None) -> float:
    """
    Locate a sign change of `d` inside [a, b] by bisection.

    Signs are thresholded: |d| <= zero_tol counts as zero. The bracket [a, b]
    keeps d(a)*d(b) < 0; a midpoint with zero sign is returned at once.

    Returns:
        A point c with |d(c)| <= zero_tol, or the midpoint of the final bracket
        (width <= bisect_tol*max(1, |a|) or after bisect_max_iter steps)

    Raises:
        BracketError: a >= b, or d has the same thresholded sign at both ends
    """
    cfg = cfg or DEFAULT_CONFIG
    tol = cfg.zero_tol if zero_tol is None else zero_tol
    if not a < b:
        raise BracketError(f"Empty bracket [{a}, {b}]", {'a': a, 'b': b})
    sign_a, sign_b = _sign(d(a), tol), _sign(d(b), tol)
    if sign_a * sign_b >= 0:
        raise BracketError("Endpoints do not bracket a sign change",
                           {'a': a, 'b': b, 'sign_a': sign_a, 'sign_b': sign_b})
    width = cfg.bisect_tol * max(1.0, abs(a))
    for _ in range(cfg.bisect_max_iter):
        c = 0.5 * (a + b)
        sign_c = _sign(d(c), tol)
        if sign_c == 0:
            return c
        if sign_c * sign_b < 0:
            a = c
        else:
            b, sign_b = c, sign_c
        if b - a <= width:
            break
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# Root sweep
# ---------------------------------------------------------------------------

class _RootSweep:
    """Finds a start point past the last sign change of ldif and its derivatives."""

    def __init__(self, f1: ComplexityFn, f2: ComplexityFn,
                 cfg: ComparatorConfig, trace: ComparisonTrace):
        self.f1 = f1
        self.f2 = f2
        self.cfg = cfg
        self.trace = trace
        self.orders = list(range(cfg.pmax + 1))
        self.inactive: Set[int] = set()

    def _ldif(self, x: float) -> float:
        return ldif(self.f1, self.f2, x)

    def derivative(self, p: int, x: float) -> float:
        self.trace.sweep_evaluations += 1
        return fd_derivative(self._ldif, p, x, self.cfg)

    def tolerance(self, p: int, x: float) -> float:
        """Zero threshold of order p at x: zero_tol plus the rounding floor."""
        scale = 1.0 + max(abs(self.f1.log_value(x)), abs(self.f2.log_value(x)))
        h = self.cfg.fd_step * max(1.0, abs(x))
        return self.cfg.zero_tol + (2.0 ** p) * _ROUNDOFF_FACTOR * _EPS * scale / h ** p

    def signed(self, p: int, x: float) -> int:
        """Thresholded sign of ldif^(p)(x); raises EvaluationError if inadmissible."""
        return _sign(self.derivative(p, x), self.tolerance(p, x))

    def is_zero_function(self, p: int, x0: float) -> bool:
        evaluable = 0
        for i in range(self.cfg.zero_samples):
            x = x0 * 2.0 ** i
            try:
                if self.signed(p, x) != 0:
                    return False
            except EvaluationError:
                continue
            evaluable += 1
        return evaluable >= 2

    def _flat_orders(self, x: float) -> Optional[List[int]]:
        """Active orders whose value at x is thresholded zero; None if x is inadmissible."""
        try:
            self._ldif(x)
        except EvaluationError:
            return None
        flat = []
        for p in self.orders:
            if p in self.inactive:
                continue
            try:
                if self.signed(p, x) == 0:
                    flat.append(p)
            except EvaluationError:
                return None
        return flat

    def skip(self, xmin: float) -> float:
        """
        Step xmin forward by 1 while it is inadmissible or sits on a zero.

        A derivative order flat for flat_cap consecutive steps is retired at
        once; order 0 and inadmissible points are bounded by skip_cap.
        """
        flat = None
        runs: Dict[int, int] = {}
        for step in range(self.cfg.skip_cap + 1):
            flat = self._flat_orders(xmin)
            if flat is not None:
                runs = {p: runs.get(p, 0) + 1 for p in flat}
                stalled = [p for p in flat if p > 0 and runs[p] >= self.cfg.flat_cap]
                if stalled:
                    self._retire(stalled, xmin)
                    flat = [p for p in flat if p not in stalled]
            else:
                runs = {}
            if flat == []:
                return xmin
            if step < self.cfg.skip_cap:
                xmin += 1.0
        if flat is None:
            self.trace.notes.append(f"no admissible point found up to {xmin}")
            return xmin
        self._retire(flat, xmin)
        return xmin

    def _retire(self, orders: List[int], xmin: float) -> None:
        for p in orders:
            if self.is_zero_function(p, xmin):
                self.trace.zero_orders.append(p)
                self.trace.notes.append(f"derivative order {p} detected as the zero function")
            else:
                self.trace.suspended_orders.append(p)
                self.trace.notes.append(f"derivative order {p} stays flat; excluded from root tests")
            self.inactive.add(p)

    def scan(self, xmin: float) -> Optional[Tuple[int, float, float]]:
        """Double xmax from xmin+1 and report the first order with a sign change."""
        active = [p for p in self.orders if p not in self.inactive]
        signs = {}
        for p in active:
            try:
                signs[p] = self.signed(p, xmin)
            except EvaluationError:
                signs[p] = 0
        xmax = xmin + 1.0
        for _ in range(self.cfg.tmax + 1):
            for p in active:
                try:
                    if self.signed(p, xmax) * signs[p] < 0:
                        return p, xmin, xmax
                except EvaluationError:
                    continue
            xmax *= 2.0
        return None

    def locate(self, p: int, a: float, b: float) -> float:
        tol = min(self.tolerance(p, a), self.tolerance(p, b))
        try:
            return bisect_root(lambda x: self.derivative(p, x), a, b, self.cfg, zero_tol=tol)
        except (BracketError, EvaluationError) as exc:
            logger.debug(f"Bisection of order {p} on [{a}, {b}] failed: {exc}")
            return b

    def run(self) -> float:
        for p in self.orders:
            if self.is_zero_function(p, 1.0):
                self.inactive.add(p)
                self.trace.zero_orders.append(p)
        if 0 in self.trace.zero_orders:
            self.trace.notes.append("ldif is the zero function")
            self.inactive.update(self.orders)
            return self.skip(1.0)

        xmin = 1.0
        while True:
            xmin = self.skip(xmin)
            if all(p in self.inactive for p in self.orders):
                return xmin
            located = self.scan(xmin)
            if located is None:
                return xmin
            p, a, b = located
            root = self.locate(p, a, b)
            self.trace.roots.append(RootRecord(p, root))
            logger.debug(f"Root of order {p} located at {root:.6g} in [{a:.6g}, {b:.6g}]")
            xmin = root + 1.0
            if len(self.trace.roots) >= self.cfg.max_roots:
                logger.warning(f"Root sweep stopped after {self.cfg.max_roots} roots "
                               f"({self.f1} vs {self.f2})")
                self.trace.notes.append(f"root budget of {self.cfg.max_roots} exhausted")
                return xmin


def find_root_free_start(f1: ComplexityFn, f2: ComplexityFn,
                         cfg: Optional[ComparatorConfig] = None,
                         trace: Optional[ComparisonTrace] = None) -> float:
    """
    Start point beyond which the sweep finds no sign change of ldif^(p), p <= pmax.

    Starting from xmin = 1, xmax is doubled from xmin+1 up to tmax times; the
    lowest order with ldif^(p)(xmin)*ldif^(p)(xmax) < 0 is bisected, xmin moves
    one past the root and the sweep restarts. Orders that vanish identically
    are skipped, and xmin is stepped past points where some order is zero or
    where either function is not positive.

    Returns:
        Start point s >= 1
    """
    cfg = cfg or DEFAULT_CONFIG
    trace = trace if trace is not None else ComparisonTrace()
    start = _RootSweep(f1, f2, cfg, trace).run()
    trace.start = start
    return start


# ---------------------------------------------------------------------------
# Ratio limit
# ---------------------------------------------------------------------------

def estimate_ratio_limit(fnum: ComplexityFn, fden: ComplexityFn, start: float,
                         cfg: Optional[ComparatorConfig] = None,
                         trace: Optional[ComparisonTrace] = None) -> LimitEstimate:
    """
    Estimate lim fnum(n)/fden(n) along nv(1) = start, nv(i) = q*nv(i-1).

    Bounded when the last k ratios differ pairwise (consecutively) by at most
    epsilon; after L samples, Divergent when the last k ratios increase
    strictly and by at least a factor (1+epsilon) overall; otherwise
    Inconclusive. A ln-ratio above overflow_log_ratio is Divergent at once.
    """
    cfg = cfg or DEFAULT_CONFIG
    if start < 1:
        raise ComparatorError(f"ratio sampling starts at n >= 1, got {start}")

    samples: List[Tuple[float, float]] = []
    ratios: List[float] = []
    nv = float(start)
    for _ in range(cfg.max_samples):
        if trace is not None:
            trace.ratio_evaluations += 1
        log_ratio = fnum.log_value(nv) - fden.log_value(nv)
        if log_ratio > cfg.overflow_log_ratio:
            samples.append((nv, math.inf))
            return LimitEstimate(LimitKind.DIVERGENT, None, tuple(samples))
        rho = math.exp(log_ratio)
        samples.append((nv, rho))
        ratios.append(rho)
        if len(ratios) >= cfg.k:
            window = np.asarray(ratios[-cfg.k:])
            if np.all(np.abs(np.diff(window)) <= cfg.epsilon):
                return LimitEstimate(LimitKind.BOUNDED, rho, tuple(samples))
        nv *= cfg.q

    window = np.asarray(ratios[-cfg.k:])
    if np.all(np.diff(window) > 0) and window[-1] >= (1.0 + cfg.epsilon) * window[0]:
        return LimitEstimate(LimitKind.DIVERGENT, None, tuple(samples))
    return LimitEstimate(LimitKind.INCONCLUSIVE, None, tuple(samples))


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------

def decide_outcome(forward: LimitEstimate, backward: Optional[LimitEstimate],
                   epsilon: float) -> CompOutcome:
    """
    Map the f1/f2 and f2/f1 limit estimates to an outcome.

    The mapping commutes with swapping the arguments:
    decide_outcome(b, f) is decide_outcome(f, b).swapped(). A one-sided
    bounded limit above epsilon counts as EQUIVALENT; a one-sided bounded
    limit at or below epsilon makes that numerator the smaller function.
    `backward` is only consulted when `forward` is not DIVERGENT.
    """
    if forward.kind is LimitKind.DIVERGENT:
        return CompOutcome.SECOND_SMALLER
    if backward is None:
        raise ComparatorError("backward estimate required unless the forward ratio diverges")
    if backward.kind is LimitKind.DIVERGENT:
        return CompOutcome.FIRST_SMALLER
    if forward.kind is LimitKind.BOUNDED and backward.kind is LimitKind.BOUNDED:
        return CompOutcome.EQUIVALENT
    if forward.kind is LimitKind.BOUNDED:
        return CompOutcome.EQUIVALENT if forward.value > epsilon else CompOutcome.FIRST_SMALLER
    if backward.kind is LimitKind.BOUNDED:
        return CompOutcome.EQUIVALENT if backward.value > epsilon else CompOutcome.SECOND_SMALLER
    return CompOutcome.INCONCLUSIVE


def comp(f1: ComplexityFn, f2: ComplexityFn,
         cfg: Optional[ComparatorConfig] = None) -> CompResult:
    """
    Compare the asymptotic growth of two complexity functions.

    Evaluation problems never propagate: they yield INCONCLUSIVE with a note
    in the trace.

    Args:
        f1: First complexity function
        f2: Second complexity function
        cfg: Comparator configuration (defaults when omitted)

    Returns:
        CompResult with the outcome and the diagnostic trace
    """
    cfg = cfg or DEFAULT_CONFIG
    trace = ComparisonTrace()
    try:
        start = find_root_free_start(f1, f2, cfg, trace)
        forward = estimate_ratio_limit(f1, f2, start, cfg, trace)
        trace.forward = forward
        if forward.kind is LimitKind.DIVERGENT:
            outcome = CompOutcome.SECOND_SMALLER
        else:
            backward = estimate_ratio_limit(f2, f1, start, cfg, trace)
            trace.backward = backward
            outcome = decide_outcome(forward, backward, cfg.epsilon)
    except (EvaluationError, ComparatorError) as exc:
        logger.warning(f"Comparison of {f1} and {f2} is inconclusive: {exc}")
        trace.notes.append(f"error: {exc}")
        outcome = CompOutcome.INCONCLUSIVE

    logger.debug(f"comp({f1}, {f2}) = {outcome}")
    return CompResult(outcome, trace)


DEFAULT_CONFIG = ComparatorConfig()
