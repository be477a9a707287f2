"""
Main entry point for approxcomp.

This module provides the command-line interface: comparing and classifying
complexity functions, and composing evaluation plans from a service registry.

Exit codes: 0 success, 1 error, 2 inconclusive comparison, 64 usage error.
"""

import logging
import sys
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import click

from .config import Config
from .modules.classifier import (
    classify as classify_functions,
    insert_function,
    library_to_dict,
    refine as refine_library,
    render_classes,
)
from .modules.comparator import (
    CompOutcome,
    ComparatorConfig,
    ComplexityFn,
    DEFAULT_CONFIG,
    comp,
)
from .modules.composer import (
    DEFAULT_MAX_FORMULA_DEPTH,
    compose as compose_plan,
    emit_plan,
    error_bounds,
    execute_plan,
    plan_to_dict,
)
from .modules.registry import load_registry
from .modules.reporting import compare_matrix, export_matrix, outcome_counts
from .utils.exceptions import ApproxCompException, ConfigurationError
from .utils.helpers import dump_json, parse_bindings, parse_definition, read_function_list
from .utils.logger import setup_logger

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64

logger = logging.getLogger(__name__)


def comparator_options(func: Callable) -> Callable:
    """Attach the comparator override flags; unset flags keep the configured values."""
    options = [
        click.option('--q', type=int, default=None,
                     help=f'Ratio of the sampling sequence (default: {DEFAULT_CONFIG.q})'),
        click.option('--k', type=int, default=None,
                     help=f'Consecutive ratios that must agree (default: {DEFAULT_CONFIG.k})'),
        click.option('--eps', type=float, default=None,
                     help=f'Ratio tolerance epsilon (default: {DEFAULT_CONFIG.epsilon})'),
        click.option('--L', 'samples', type=int, default=None,
                     help=f'Ratio samples before giving up (default: {DEFAULT_CONFIG.max_samples})'),
        click.option('--tmax', type=int, default=None,
                     help=f'Doublings of the root sweep (default: {DEFAULT_CONFIG.tmax})'),
        click.option('--pmax', type=int, default=None,
                     help=f'Highest derivative order tested (default: {DEFAULT_CONFIG.pmax})'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


json_option = click.option('--json', 'as_json', is_flag=True, help='Emit machine-readable JSON')


def _comparator_config(ctx: click.Context, q=None, k=None, eps=None, samples=None,
                       tmax=None, pmax=None) -> ComparatorConfig:
    config: Config = ctx.obj['config']
    try:
        base = ComparatorConfig.from_config(config)
        return base.with_overrides(q=q, k=k, epsilon=eps, max_samples=samples,
                                   tmax=tmax, pmax=pmax)
    except ConfigurationError as e:
        raise click.UsageError(f"{e.message}: {'; '.join(e.details.get('issues', []))}")


def _echo_json(ctx: click.Context, value) -> None:
    click.echo(dump_json(value, ctx.obj['indent']))


@click.group()
@click.option('--config', 'config_path', default=None,
              help='Configuration file path (defaults to config/default_config.json)')
@click.option('--verbose', is_flag=True, help='Enable verbose output')
@click.option('--log-level', default=None,
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
              help='Set logging level (overrides the configuration)')
@click.pass_context
def main(ctx, config_path: Optional[str], verbose: bool, log_level: Optional[str]):
    """
    approxcomp: approximate comparison of complexity functions and
    composition of mathematical services.
    """
    ctx.ensure_object(dict)
    config = Config(config_path).load()
    logging_cfg = config.get_logging_config()

    level_name = log_level or ('INFO' if verbose else logging_cfg.get('level', 'WARNING'))
    log_file = logging_cfg.get('file_path')
    setup_logger(level=getattr(logging, level_name.upper()),
                 log_file=log_file,
                 console_output=logging_cfg.get('console', True),
                 file_output=bool(log_file))

    ctx.obj['config'] = config
    ctx.obj['indent'] = config.get_output_config().get('indent', 2)
    logger.info(f"Configuration loaded from: {config.config_path}")


@main.command()
@click.option('--f1', 'first', required=True, help='First complexity function of n')
@click.option('--f2', 'second', required=True, help='Second complexity function of n')
@comparator_options
@json_option
@click.pass_context
def compare(ctx, first: str, second: str, q, k, eps, samples, tmax, pmax, as_json: bool) -> int:
    """
    Compare the asymptotic growth of two functions.

    Prints EQUIVALENT (<1>), FIRST_SMALLER (<2>), SECOND_SMALLER (<3>) or
    INCONCLUSIVE (<4>); exits with 2 on INCONCLUSIVE.
    """
    cfg = _comparator_config(ctx, q, k, eps, samples, tmax, pmax)
    f1, f2 = ComplexityFn.from_expr(first), ComplexityFn.from_expr(second)
    result = comp(f1, f2, cfg)

    if as_json:
        _echo_json(ctx, {'f1': str(f1), 'f2': str(f2), **result.to_dict(),
                         'config': cfg.to_dict()})
    else:
        click.echo(str(result.outcome))
    return EXIT_INCONCLUSIVE if result.outcome is CompOutcome.INCONCLUSIVE else EXIT_OK


def _emit_library(ctx, lib, as_json: bool) -> int:
    if as_json:
        _echo_json(ctx, library_to_dict(lib))
    elif lib.classes:
        click.echo(render_classes(lib))
    return EXIT_OK


@main.command()
@click.option('--functions', 'functions_file', required=True,
              help='Function list file (one `id = expression` per line)')
@comparator_options
@json_option
@click.pass_context
def classify(ctx, functions_file: str, q, k, eps, samples, tmax, pmax, as_json: bool) -> int:
    """Partition functions into theta classes, sorted by growth."""
    cfg = _comparator_config(ctx, q, k, eps, samples, tmax, pmax)
    lib = classify_functions(read_function_list(functions_file), cfg)
    return _emit_library(ctx, lib, as_json)


@main.command()
@click.option('--functions', 'functions_file', required=True,
              help='Function list file (one `id = expression` per line)')
@click.option('--add', 'additions', required=True, multiple=True,
              help='Function to insert as "id=EXPR" (repeatable)')
@comparator_options
@json_option
@click.pass_context
def insert(ctx, functions_file: str, additions: Sequence[str], q, k, eps, samples, tmax, pmax,
           as_json: bool) -> int:
    """Classify a function list, then insert further functions incrementally."""
    cfg = _comparator_config(ctx, q, k, eps, samples, tmax, pmax)
    lib = classify_functions(read_function_list(functions_file), cfg)
    for addition in additions:
        identifier, fn = parse_definition(addition)
        lib = insert_function(lib, identifier, fn)
    return _emit_library(ctx, lib, as_json)


@main.command()
@click.option('--functions', 'functions_file', required=True,
              help='Function list file (one `id = expression` per line)')
@comparator_options
@json_option
@click.pass_context
def refine(ctx, functions_file: str, q, k, eps, samples, tmax, pmax, as_json: bool) -> int:
    """
    Classify, then merge classes using a comparator with a widened budget
    (more ratio samples and a tighter epsilon, per the refine configuration).
    """
    cfg = _comparator_config(ctx, q, k, eps, samples, tmax, pmax)
    refine_cfg = ctx.obj['config'].get_refine_config()
    better_cfg = cfg.widened(refine_cfg.get('samples_factor', 4),
                             refine_cfg.get('epsilon_divisor', 10))
    lib = classify_functions(read_function_list(functions_file), cfg)
    refined = refine_library(lib, lambda f1, f2: comp(f1, f2, better_cfg), better_cfg)
    return _emit_library(ctx, refined, as_json)


@main.command()
@click.option('--functions', 'functions_file', required=True,
              help='Function list file (one `id = expression` per line)')
@click.option('--csv', 'csv_file', default=None, help='Also write the matrix as CSV')
@comparator_options
@json_option
@click.pass_context
def matrix(ctx, functions_file: str, csv_file: Optional[str], q, k, eps, samples, tmax, pmax,
           as_json: bool) -> int:
    """Print comp(row, column) for every ordered pair of functions."""
    cfg = _comparator_config(ctx, q, k, eps, samples, tmax, pmax)
    table = compare_matrix(read_function_list(functions_file), cfg)
    if csv_file:
        export_matrix(table, csv_file)
    if as_json:
        _echo_json(ctx, {'matrix': {row: dict(table.loc[row]) for row in table.index},
                         'counts': outcome_counts(table)})
    else:
        click.echo(table.to_string())
    return EXIT_OK


@main.command()
@click.option('--registry', 'registry_file', required=True, help='Registry JSON file')
@click.option('--expr', 'expression', required=True, help='Expression to compose')
@click.option('--emit-plan', 'plan_file', default=None, help='Write the plan JSON to this file')
@click.option('--eval', 'bindings_text', default=None,
              help='Evaluate the plan at bindings, e.g. x=1,y=2')
@click.option('--strict', is_flag=True, help='Fail when a formula validity assumption does not hold')
@json_option
@click.pass_context
def compose(ctx, registry_file: str, expression: str, plan_file: Optional[str],
            bindings_text: Optional[str], strict: bool, as_json: bool) -> int:
    """Compose an executable plan for an expression from a service registry."""
    config: Config = ctx.obj['config']
    indent = ctx.obj['indent']
    cfg = _comparator_config(ctx)
    reg = load_registry(registry_file, cfg)
    depth = config.get('composer.max_formula_depth', DEFAULT_MAX_FORMULA_DEPTH)
    plan = compose_plan(expression, reg, depth)

    if plan_file:
        path = Path(plan_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(emit_plan(plan, indent) + '\n', encoding='utf-8')
        logger.info(f"Plan written to {path}")

    value, bounds = None, []
    if bindings_text is not None:
        bindings = parse_bindings(bindings_text)
        value = execute_plan(plan, bindings, strict=strict)
        bounds = error_bounds(plan, bindings)

    if as_json:
        output = {'plan': plan_to_dict(plan)}
        if bindings_text is not None:
            output['value'] = value
            output['error_bounds'] = [{'formula': f, 'bound': b} for f, b in bounds]
        _echo_json(ctx, output)
        return EXIT_OK

    click.echo(emit_plan(plan, indent))
    if bindings_text is not None:
        click.echo(f"value: {value:.15g}")
        for formula, bound in bounds:
            shown = 'n/a' if bound is None else f"{bound:.6g}"
            click.echo(f"error bound ({formula}): {shown}")
    return EXIT_OK


def run(argv: Optional[List[str]] = None) -> int:
    """
    Run the command line and map outcomes to exit codes.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        Exit status
    """
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        result = main.main(args=args, prog_name='approxcomp', standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return EXIT_USAGE
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.Abort:
        click.echo('Aborted!', err=True)
        return EXIT_ERROR
    except click.ClickException as e:
        e.show()
        return EXIT_ERROR
    except ApproxCompException as e:
        click.echo(f"error: {e.message}", err=True)
        return EXIT_ERROR
    except OSError as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_ERROR
    return result if isinstance(result, int) else EXIT_OK


def cli():
    """Console script entry point."""
    sys.exit(run(sys.argv[1:]))


if __name__ == '__main__':
    cli()
