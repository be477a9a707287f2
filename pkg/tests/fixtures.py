"""
Shared fixtures: the analytic function catalog, the piecewise and oscillating
complexity functions, and desk registries.
"""

import math

from scipy.special import gammaln

from src.modules.comparator import ComplexityFn

# id -> expression in n
CATALOG = {
    'lin': 'n',
    'quad': 'n^2',
    'cubic': 'n^3',
    'nlogn': 'n*log2(n)',
    'exp2': '2^n',
    'fact': 'factorial(n)',
    'affine': '3*n + 5',
}

# growth rank of each catalog entry; equal ranks are theta-equivalent
CATALOG_RANK = {
    'lin': 0,
    'affine': 0,
    'nlogn': 1,
    'quad': 2,
    'cubic': 3,
    'exp2': 4,
    'fact': 5,
}


def catalog_functions():
    return [(identifier, ComplexityFn.from_expr(source)) for identifier, source in CATALOG.items()]


def expected_outcome(rank1: int, rank2: int) -> int:
    if rank1 == rank2:
        return 1
    return 2 if rank1 < rank2 else 3


def _piecewise_log(x: float) -> float:
    # n on [10, 20], n! elsewhere
    if 10 <= x <= 20:
        return math.log(x)
    return float(gammaln(x + 1.0))


PIECEWISE = ComplexityFn.from_callable('piecewise', _piecewise_log)

OSCILLATING = ComplexityFn.from_expr('max(1000 + floor(2^ceil(n*sin(mod(n, 1000)))), n)')


def base_registry_dict():
    """Base services for the arithmetic operators."""
    return {
        'services': [
            {'id': 'add', 'operation': '+', 'arity': 2, 'impl': 'p1 + p2'},
            {'id': 'sub', 'operation': '-', 'arity': 2, 'impl': 'p1 - p2'},
            {'id': 'mul', 'operation': '*', 'arity': 2, 'impl': 'p1*p2'},
            {'id': 'div', 'operation': '/', 'arity': 2, 'impl': 'p1/p2'},
            {'id': 'pow', 'operation': '^', 'arity': 2, 'impl': 'p1^p2'},
            {'id': 'neg', 'operation': '-', 'arity': 1, 'impl': '-p1'},
        ],
        'formulas': [],
        'numeric_services': [],
    }


def taylor_registry_dict():
    data = base_registry_dict()
    data['formulas'] = [
        {
            'id': 'taylor_sin',
            'lhs': 'sin(?x)',
            'rhs': '?x - ?x^3/6',
            'error': 'abs(?x)^5/120',
            'validity': '1 - abs(?x)',
            'description': 'third-order Taylor polynomial of sin around 0',
        },
    ]
    return data


def numeric_registry_dict():
    data = base_registry_dict()
    data['numeric_services'] = [
        {'id': 'sin_quadratic', 'operation': 'sin', 'arity': 1,
         'complexity': 'n^2', 'impl': 'sin(p1)'},
        {'id': 'sin_nlogn', 'operation': 'sin', 'arity': 1,
         'complexity': 'n*log2(n)', 'impl': 'sin(p1)'},
    ]
    return data


def sweep_allowance(cfg, roots: int) -> int:
    """
    Evaluation allowance for a sweep that located `roots` roots.

    Each segment may step 2*flat_cap points, retire every derivative order,
    scan tmax+2 points and bisect once; the zero-function checks at 1 come first.
    """
    orders = cfg.pmax + 1
    per_segment = (2 * cfg.flat_cap * orders
                   + cfg.zero_samples * orders
                   + (cfg.tmax + 2) * orders
                   + cfg.bisect_max_iter + 2)
    return cfg.zero_samples * orders + (roots + 1) * per_segment
