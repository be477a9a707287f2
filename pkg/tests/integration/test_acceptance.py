#!/usr/bin/env python3
"""
End-to-end scenarios for approxcomp.

Tests cover:
- Catalog comparisons against the analytic growth order
- Scale invariance and root localization
- Classification and incremental insertion
- Composition soundness, Taylor approximation and numeric selection
- Termination on pathological complexity functions
- Deterministic JSON output
"""

import itertools
import math
import os
import sys
import time
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..'))

from src.modules.classifier import classify, insert_function, library_to_dict
from src.modules.comparator import (
    CompOutcome,
    ComparatorConfig,
    ComparisonTrace,
    ComplexityFn,
    comp,
    find_root_free_start,
)
from src.modules.composer import (
    Approx,
    Invoke,
    LeafNumber,
    LeafVar,
    NumericInvoke,
    compose,
    emit_plan,
    execute_plan,
)
from src.modules.expression import decompose_top, evaluate, parse
from src.modules.registry import find_best_numeric, registry_from_dict
from src.modules.reporting import asymmetric_pairs, compare_matrix, outcome_counts
from src.utils.exceptions import CompositionError
from src.utils.helpers import dump_json
from tests.fixtures import (
    CATALOG,
    CATALOG_RANK,
    OSCILLATING,
    PIECEWISE,
    base_registry_dict,
    catalog_functions,
    expected_outcome,
    numeric_registry_dict,
    sweep_allowance,
    taylor_registry_dict,
)

F = ComplexityFn.from_expr


class TestCatalogComparisons(unittest.TestCase):
    """Pairwise comparisons over the analytic catalog."""

    def test_all_pairs_match_growth_order(self):
        functions = catalog_functions()
        started = time.perf_counter()
        for (id1, f1), (id2, f2) in itertools.combinations(functions, 2):
            result = comp(f1, f2)
            expected = expected_outcome(CATALOG_RANK[id1], CATALOG_RANK[id2])
            self.assertEqual(result.code, expected, f"comp({id1}, {id2}) = {result.outcome}")
        self.assertLess(time.perf_counter() - started, 10.0)

    def test_only_linear_pair_is_equivalent(self):
        functions = dict(catalog_functions())
        self.assertIs(comp(functions['lin'], functions['affine']).outcome, CompOutcome.EQUIVALENT)
        self.assertIs(comp(functions['affine'], functions['lin']).outcome, CompOutcome.EQUIVALENT)

    def test_matrix_is_antisymmetric(self):
        subset = [(i, F(CATALOG[i])) for i in ('lin', 'nlogn', 'quad', 'exp2')]
        table = compare_matrix(subset)
        self.assertTrue(asymmetric_pairs(table).empty)
        counts = outcome_counts(table)
        self.assertEqual(counts['<2>'], 6)
        self.assertEqual(counts['<3>'], 6)
        self.assertEqual(counts['<4>'], 0)

    def test_scale_invariance(self):
        for identifier, f in catalog_functions():
            for c in (0.5, 2.0, 100.0):
                result = comp(f, f.scaled(c))
                self.assertIs(result.outcome, CompOutcome.EQUIVALENT, f"{identifier} scaled by {c}")


class TestRootLocalization(unittest.TestCase):

    def check_start(self, f1, f2, crossing):
        cfg = ComparatorConfig()
        started = time.perf_counter()
        s = find_root_free_start(F(f1), F(f2), cfg)
        self.assertLess(time.perf_counter() - started, 1.0)
        self.assertGreater(s, crossing)
        self.assertLessEqual(s, crossing + 2 * cfg.q)

    def test_quadratic_against_four_n(self):
        self.check_start('n^2', '4*n', 4.0)

    def test_quadratic_against_ten_n(self):
        self.check_start('n^2', '10*n', 10.0)

    def test_exponential_against_cubic(self):
        self.check_start('2^n', 'n^3', 9.94)

    def test_start_is_past_every_sign_change_on_integer_grid(self):
        n = np.arange(1.0, 1e6 + 1.0)
        cases = [
            ('n^2', '4*n', np.log(n) - np.log(4.0)),
            ('n^2', '10*n', np.log(n) - np.log(10.0)),
            ('2^n', 'n^3', n * np.log(2.0) - 3.0 * np.log(n)),
            ('n^2 + 500', '60*n', np.log(n ** 2 + 500.0) - np.log(60.0 * n)),
        ]
        for f1, f2, values in cases:
            signs = np.sign(values)
            differing = np.flatnonzero(signs != signs[-1])
            last = n[differing[-1]] if differing.size else 0.0
            s = find_root_free_start(F(f1), F(f2))
            self.assertGreater(s, last, f"{f1} vs {f2}")


class TestClassification(unittest.TestCase):

    # five theta classes, listed in ascending growth
    PARTITION = [
        {'n': 'n', 'two_n': '2*n', 'affine': '3*n + 5'},
        {'nlogn': 'n*log2(n)', 'nlogn_mix': '4*n*log2(n) + n'},
        {'quad': 'n^2', 'quad_mix': 'n^2 + 100*n'},
        {'cubic': 'n^3', 'cubic_mix': '0.5*n^3 + n^2'},
        {'exp2': '2^n'},
    ]

    # input order deliberately mixes the classes
    ORDER = ['cubic', 'n', 'exp2', 'quad_mix', 'nlogn', 'two_n', 'cubic_mix', 'quad',
             'nlogn_mix', 'affine']

    def functions(self, ids):
        sources = {k: v for group in self.PARTITION for k, v in group.items()}
        return [(identifier, F(sources[identifier])) for identifier in ids]

    def test_partition_and_insertion(self):
        started = time.perf_counter()
        lib = classify(self.functions(self.ORDER))
        expected = [set(group) for group in self.PARTITION]
        self.assertEqual([set(cls.ids) for cls in lib.classes], expected)

        for cls in lib.classes:
            for (a, fa), (b, fb) in itertools.permutations(cls.members, 2):
                self.assertIs(comp(fa, fb).outcome, CompOutcome.EQUIVALENT, f"comp({a}, {b})")

        partial = classify(self.functions([i for i in self.ORDER if i not in ('affine', 'exp2')]))
        for identifier, fn in self.functions(['affine', 'exp2']):
            partial = insert_function(partial, identifier, fn)
        self.assertEqual([set(cls.ids) for cls in partial.classes], expected)
        self.assertLess(time.perf_counter() - started, 30.0)


def _random_expression(rng: np.random.Generator, depth: int) -> str:
    if depth == 0 or rng.random() < 0.25:
        choice = rng.integers(3)
        if choice == 0:
            return 'x'
        if choice == 1:
            return 'y'
        return f"{rng.uniform(0.5, 3.0):.3f}"
    op = ['+', '-', '*', '/', '^'][rng.integers(5)]
    left = _random_expression(rng, depth - 1)
    if op == '^':
        return f"({left})^{rng.integers(2, 4)}"
    right = _random_expression(rng, depth - 1)
    if op == '/':
        # denominator bounded away from zero
        return f"({left})/(({right})^2 + 1)"
    return f"({left}) {op} ({right})"


def _only_services(node) -> bool:
    if isinstance(node, (LeafNumber, LeafVar)):
        return True
    if isinstance(node, Invoke):
        return all(_only_services(child) for child in node.args)
    return False


class TestComposition(unittest.TestCase):

    def test_random_expressions_agree_with_direct_evaluation(self):
        rng = np.random.default_rng(20240617)
        reg = registry_from_dict(base_registry_dict())
        for _ in range(10):
            expr = parse(_random_expression(rng, 4))
            plan = compose(expr, reg)
            self.assertTrue(_only_services(plan.root))
            for _ in range(5):
                bindings = {'x': rng.uniform(0.5, 2.0), 'y': rng.uniform(0.5, 2.0)}
                expected = evaluate(expr, bindings)
                actual = execute_plan(plan, bindings)
                self.assertLessEqual(abs(actual - expected), 1e-9 * max(1.0, abs(expected)))

    def test_taylor_scenario(self):
        reg = registry_from_dict(taylor_registry_dict())
        plan = compose('sin(x) + x^2', reg)
        self.assertIsInstance(plan.root, Invoke)
        approx = plan.root.args[0]
        self.assertIsInstance(approx, Approx)
        self.assertTrue(_only_services(approx.inner))

        for x in (0.05, 0.1, 0.2):
            value = execute_plan(plan, {'x': x})
            true_value = math.sin(x) + x * x
            bound = evaluate(plan.errors[0].error, {'x': x})
            self.assertAlmostEqual(bound, x ** 5 / 120)
            self.assertLessEqual(abs(value - true_value), bound)

        self.assertAlmostEqual(execute_plan(plan, {'x': 0.1}), 0.1 - 0.1 ** 3 / 6 + 0.01, places=12)

    def test_missing_operation(self):
        reg = registry_from_dict(taylor_registry_dict())
        with self.assertRaises(CompositionError) as ctx:
            compose('gamma(x)', reg)
        self.assertEqual(str(ctx.exception.signature), 'gamma/1')

    def test_lowest_complexity_numeric_service(self):
        reg = registry_from_dict(numeric_registry_dict())
        plan = compose('sin(x) + sin(y*2)', reg)
        numeric_nodes = [child for child in plan.root.args if isinstance(child, NumericInvoke)]
        self.assertEqual(len(numeric_nodes), 2)
        sig = decompose_top(parse('sin(x)'))[0]
        for node in numeric_nodes:
            self.assertEqual(node.service, 'sin_nlogn')
            self.assertEqual(node.service, find_best_numeric(reg, sig).id)

    def test_base_service_preferred_over_numeric(self):
        data = numeric_registry_dict()
        data['numeric_services'].append({'id': 'add_numeric', 'operation': '+', 'arity': 2,
                                         'complexity': 'n', 'impl': 'p1 + p2'})
        plan = compose('x + y', registry_from_dict(data))
        self.assertIsInstance(plan.root, Invoke)
        self.assertEqual(plan.root.service, 'add')


class TestPathologicalFunctions(unittest.TestCase):

    def check_terminates(self, f):
        cfg = ComparatorConfig()
        result = comp(f, F('n^2'), cfg)
        self.assertIsInstance(result.outcome, CompOutcome)
        self.assertLessEqual(result.trace.sweep_evaluations, cfg.sweep_budget())
        self.assertLessEqual(result.trace.sweep_evaluations,
                             sweep_allowance(cfg, len(result.trace.roots)))
        self.assertLessEqual(result.trace.ratio_evaluations, 2 * cfg.max_samples)

    def test_piecewise(self):
        self.check_terminates(PIECEWISE)

    def test_oscillating(self):
        self.check_terminates(OSCILLATING)


class TestDeterminism(unittest.TestCase):

    def outputs(self):
        lib = classify(catalog_functions())
        result = comp(F('2^n'), F('n^3'))
        plan = compose('sin(x) + x^2', registry_from_dict(taylor_registry_dict()))
        return (dump_json(library_to_dict(lib)), dump_json(result.to_dict()), emit_plan(plan))

    def test_identical_json(self):
        self.assertEqual(self.outputs(), self.outputs())

    def test_trace_start_is_reproducible(self):
        first, second = ComparisonTrace(), ComparisonTrace()
        find_root_free_start(F('n^2'), F('10*n'), trace=first)
        find_root_free_start(F('n^2'), F('10*n'), trace=second)
        self.assertEqual(first.to_dict(), second.to_dict())


if __name__ == '__main__':
    unittest.main()
