#!/usr/bin/env python3
"""
Unit tests for the expression module.

Tests cover:
- Parsing, precedence and error offsets
- Canonical formatting
- Linear and log-domain evaluation
- Pattern matching, substitution and decomposition
"""

import math
import os
import sys
import unittest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..'))

import numpy as np
from scipy.special import gammaln

from src.modules.expression import (
    LEAF,
    Binary,
    Call,
    EvalMode,
    Expr,
    Number,
    PatternVar,
    Signature,
    Unary,
    Var,
    decompose_top,
    evaluate,
    format_expr,
    free_variables,
    match_pattern,
    parse,
    rebuild,
    substitute,
)
from src.utils.exceptions import (
    ArityError,
    EvaluationDomainError,
    EvaluationError,
    EvaluationOverflowError,
    ExpressionSyntaxError,
    SubstitutionError,
    UnboundVariableError,
)


_UNARY_CALLS = ('sin', 'cos', 'exp', 'ln', 'log2', 'sqrt', 'abs', 'floor', 'ceil', 'factorial')
_BINARY_CALLS = ('min', 'max', 'mod')


def _random_tree(rng: np.random.Generator, depth: int, leaves,
                 free_exponent: bool = False) -> Expr:
    """
    Random AST over `leaves` and non-negative literals.

    Exponents are small literals unless free_exponent is set.
    """
    def sub() -> Expr:
        return _random_tree(rng, depth - 1, leaves, free_exponent)

    if depth == 0 or rng.random() < 0.2:
        pick = rng.integers(3)
        if pick == 0:
            return Number.of(int(rng.integers(0, 20)))
        if pick == 1:
            return Number(['0.5', '1.25', '2.75'][rng.integers(3)])
        return leaves[rng.integers(len(leaves))]
    kind = rng.integers(4)
    if kind == 0:
        return Unary('-', sub())
    if kind == 1:
        return Call(_UNARY_CALLS[rng.integers(len(_UNARY_CALLS))], (sub(),))
    if kind == 2:
        return Call(_BINARY_CALLS[rng.integers(len(_BINARY_CALLS))], (sub(), sub()))
    op = ['+', '-', '*', '/', '^'][rng.integers(5)]
    if op == '^' and not free_exponent:
        return Binary(op, sub(), Number(['2', '3', '0.5', '150'][rng.integers(4)]))
    return Binary(op, sub(), sub())


def _abstract(rng: np.random.Generator, e: Expr, bound: dict) -> Expr:
    """Replace random subtrees of `e` by fresh pattern variables, recording them in `bound`."""
    if rng.random() < 0.3:
        name = f"v{len(bound)}"
        bound[name] = e
        return PatternVar(name)
    return rebuild(e, tuple(_abstract(rng, c, bound) for c in e.children()))


class TestParse(unittest.TestCase):
    """Parser and precedence."""

    def test_multiplication_binds_tighter(self):
        self.assertEqual(parse('2 + 3*4'),
                         Binary('+', Number('2'), Binary('*', Number('3'), Number('4'))))

    def test_power_binds_tighter_than_unary_minus(self):
        self.assertEqual(parse('-2^2'), Unary('-', Binary('^', Number('2'), Number('2'))))
        self.assertEqual(evaluate(parse('-2^2'), {}), -4.0)

    def test_power_is_right_associative(self):
        self.assertEqual(parse('2^3^2'),
                         Binary('^', Number('2'), Binary('^', Number('3'), Number('2'))))
        self.assertEqual(evaluate(parse('2^3^2'), {}), 512.0)

    def test_negative_exponent(self):
        self.assertEqual(parse('2^-1'), Binary('^', Number('2'), Unary('-', Number('1'))))

    def test_left_associative_subtraction(self):
        self.assertEqual(evaluate(parse('10 - 4 - 3'), {}), 3.0)

    def test_calls_and_pattern_variables(self):
        self.assertEqual(parse('max(n, ?x)'), Call('max', (Var('n'), PatternVar('x'))))

    def test_number_keeps_text(self):
        self.assertEqual(parse('1e-3'), Number('1e-3'))
        self.assertAlmostEqual(parse('1e-3').value, 0.001)

    def test_unknown_function_names_parse(self):
        self.assertEqual(parse('gamma(x)'), Call('gamma', (Var('x'),)))

    def test_syntax_error_offset(self):
        with self.assertRaises(ExpressionSyntaxError) as ctx:
            parse('1 + * 2')
        self.assertEqual(ctx.exception.offset, 4)

    def test_unbalanced_parenthesis(self):
        with self.assertRaises(ExpressionSyntaxError):
            parse('(n + 1')

    def test_empty_expression(self):
        with self.assertRaises(ExpressionSyntaxError):
            parse('   ')

    def test_builtin_arity(self):
        with self.assertRaises(ArityError):
            parse('sin(1, 2)')


class TestFormat(unittest.TestCase):
    """Minimal-parenthesis printer."""

    def test_canonical_spacing(self):
        self.assertEqual(format_expr(parse('n*log2( n )+1')), 'n*log2(n) + 1')
        self.assertEqual(format_expr(parse('max( n , 2 )')), 'max(n, 2)')

    def test_parentheses_kept_where_needed(self):
        self.assertEqual(format_expr(parse('(a+b)*c')), '(a + b)*c')
        self.assertEqual(format_expr(parse('a-(b-c)')), 'a - (b - c)')
        self.assertEqual(format_expr(parse('(-2)^2')), '(-2)^2')
        self.assertEqual(format_expr(parse('(2^3)^2')), '(2^3)^2')

    def test_redundant_parentheses_dropped(self):
        self.assertEqual(format_expr(parse('((a))*(b*c)')), 'a*(b*c)')
        self.assertEqual(format_expr(parse('(a*b)+c')), 'a*b + c')

    def test_reparse_is_identity(self):
        for text in ['?x - ?x^3/6', '-(a + b)', '2^-x', 'abs(?x)^5/120', 'a/(b/c)', '-2^2']:
            expr = parse(text)
            self.assertEqual(parse(format_expr(expr)), expr, text)

    def test_reparse_of_generated_trees(self):
        rng = np.random.default_rng(7)
        leaves = (Var('x'), Var('n'), PatternVar('a'))
        for _ in range(300):
            expr = _random_tree(rng, 5, leaves, free_exponent=True)
            text = format_expr(expr)
            self.assertEqual(parse(text), expr, text)


class TestEvaluate(unittest.TestCase):
    """Linear and log-domain evaluation."""

    def test_linear_arithmetic(self):
        self.assertEqual(evaluate(parse('x + y*2'), {'x': 1, 'y': 3}), 7.0)
        self.assertEqual(evaluate(parse('mod(7, 3)'), {}), 1.0)
        self.assertEqual(evaluate(parse('factorial(5)'), {}), 120.0)
        self.assertAlmostEqual(evaluate(parse('log2(8)'), {}), 3.0)

    def test_log_mode_beyond_float_range(self):
        value = evaluate(parse('2^n'), {'n': 2000.0}, EvalMode.LOG)
        self.assertAlmostEqual(value, 2000.0 * math.log(2.0), places=6)

    def test_log_mode_factorial(self):
        value = evaluate(parse('factorial(n)'), {'n': 1000.0}, EvalMode.LOG)
        self.assertAlmostEqual(value, float(gammaln(1001.0)), places=6)

    def test_log_mode_sum_of_huge_terms(self):
        value = evaluate(parse('2^n + 2^n'), {'n': 3000.0}, EvalMode.LOG)
        self.assertAlmostEqual(value, 3001.0 * math.log(2.0), places=6)

    def test_log_mode_scaled_product(self):
        value = evaluate(parse('100*factorial(n)'), {'n': 500.0}, EvalMode.LOG)
        self.assertAlmostEqual(value, math.log(100.0) + float(gammaln(501.0)), places=6)

    def test_linear_overflow(self):
        with self.assertRaises(EvaluationOverflowError):
            evaluate(parse('2^n'), {'n': 2000.0})

    def test_log_of_zero_is_domain_error(self):
        with self.assertRaises(EvaluationDomainError):
            evaluate(parse('n*log2(n)'), {'n': 1.0}, EvalMode.LOG)

    def test_division_by_zero(self):
        with self.assertRaises(EvaluationDomainError):
            evaluate(parse('1/(x - x)'), {'x': 2.0})

    def test_unbound_variable(self):
        with self.assertRaises(UnboundVariableError):
            evaluate(parse('x + 1'), {})

    def test_oscillating_function_evaluates_in_log_mode(self):
        expr = parse('max(1000 + floor(2^ceil(n*sin(mod(n, 1000)))), n)')
        for n in (1.0, 50.0, 1001.0, 1004.0, 123457.0):
            self.assertTrue(math.isfinite(evaluate(expr, {'n': n}, EvalMode.LOG)))

    def test_log_mode_factorial_twenty(self):
        value = evaluate(parse('factorial(n)'), {'n': 20}, EvalMode.LOG)
        self.assertAlmostEqual(value, 42.3356, places=4)

    def test_quotient_of_overflowed_powers(self):
        self.assertAlmostEqual(evaluate(parse('2^2000/2^1999'), {}), 2.0, places=9)
        self.assertAlmostEqual(evaluate(parse('2^1500 - 2^1499'), {}, EvalMode.LOG),
                               1499.0 * math.log(2.0), places=6)
        with self.assertRaises(EvaluationOverflowError):
            evaluate(parse('2^2000 - 2^2000 + 1'), {})

    def test_log_and_linear_modes_agree(self):
        rng = np.random.default_rng(11)
        checked = 0
        for _ in range(400):
            expr = _random_tree(rng, 5, (Var('n'),))
            for n in (3.0, 17.5, 250.0):
                try:
                    linear = evaluate(expr, {'n': n})
                    logarithm = evaluate(expr, {'n': n}, EvalMode.LOG)
                except EvaluationError:
                    continue
                if not 1e-300 < linear < math.inf:
                    continue
                checked += 1
                self.assertLessEqual(abs(math.log(linear) - logarithm),
                                     1e-9 * max(1.0, abs(logarithm)), format_expr(expr))
        self.assertGreater(checked, 100)


class TestRewriting(unittest.TestCase):
    """Matching, substitution and decomposition."""

    def test_match_binds_subexpression(self):
        bindings = match_pattern(parse('sin(?x)'), parse('sin(x + 1)'))
        self.assertEqual(bindings, {'x': parse('x + 1')})

    def test_match_fails_on_other_root(self):
        self.assertIsNone(match_pattern(parse('sin(?x)'), parse('cos(x)')))

    def test_repeated_pattern_variable_must_agree(self):
        self.assertIsNotNone(match_pattern(parse('?a - ?a'), parse('y - y')))
        self.assertIsNone(match_pattern(parse('?a - ?a'), parse('x - y')))

    def test_substitute(self):
        result = substitute(parse('?x - ?x^3/6'), {'x': parse('a + b')})
        self.assertEqual(format_expr(result), 'a + b - (a + b)^3/6')

    def test_substitute_unbound(self):
        with self.assertRaises(SubstitutionError):
            substitute(parse('?y + 1'), {'x': Var('x')})

    def test_substituting_the_match_rebuilds_the_subject(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            subject = _random_tree(rng, 5, (Var('x'), Var('y')), free_exponent=True)
            bound = {}
            pattern = _abstract(rng, subject, bound)
            bindings = match_pattern(pattern, subject)
            self.assertEqual(bindings, bound)
            self.assertEqual(substitute(pattern, bindings), subject)

    def test_decompose_top(self):
        self.assertEqual(decompose_top(parse('-x')), (Signature('-', 1), (Var('x'),)))
        self.assertEqual(decompose_top(parse('a - b')), (Signature('-', 2), (Var('a'), Var('b'))))
        self.assertEqual(decompose_top(parse('max(a, 1)'))[0], Signature('max', 2))
        self.assertEqual(decompose_top(parse('7')), (LEAF, ()))

    def test_signature_text(self):
        self.assertEqual(str(Signature('+', 2)), '+/2')
        self.assertEqual(Signature.parse('sin/1'), Signature('sin', 1))

    def test_free_variables(self):
        self.assertEqual(free_variables(parse('x*y + sin(?z) + 2')), frozenset({'x', 'y'}))


if __name__ == '__main__':
    unittest.main()
