"""
Comparison reports for sets of complexity functions.

Builds the ordered-pair outcome matrix as a pandas DataFrame and derives
summary counts from it.
"""

import logging
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import pandas as pd

from .comparator import CompOutcome, ComparatorConfig, ComplexityFn, DEFAULT_CONFIG, comp
from ..utils.logger import log_execution_time

logger = logging.getLogger(__name__)


@log_execution_time
def compare_matrix(fns: Sequence[Tuple[str, ComplexityFn]],
                   cfg: Optional[ComparatorConfig] = None) -> pd.DataFrame:
    """
    Outcome labels of comp(row, column) for every ordered pair.

    Args:
        fns: (id, function) pairs
        cfg: Comparator configuration

    Returns:
        DataFrame indexed and columned by id, cells like '<2>'
    """
    cfg = cfg or DEFAULT_CONFIG
    ids = [identifier for identifier, _ in fns]
    matrix = pd.DataFrame(index=ids, columns=ids, dtype=object)
    for row_id, f1 in fns:
        for col_id, f2 in fns:
            matrix.loc[row_id, col_id] = comp(f1, f2, cfg).outcome.label
    matrix.index.name = 'f1'
    matrix.columns.name = 'f2'
    return matrix


def outcome_counts(matrix: pd.DataFrame, include_diagonal: bool = False) -> Dict[str, int]:
    """Number of cells per outcome label."""
    size = len(matrix.index)
    cells = [matrix.iat[i, j] for i in range(size) for j in range(size)
             if include_diagonal or i != j]
    counts = pd.Series(cells, dtype=object).value_counts()
    return {outcome.label: int(counts.get(outcome.label, 0)) for outcome in CompOutcome}


def asymmetric_pairs(matrix: pd.DataFrame) -> pd.DataFrame:
    """Pairs whose two orientations are not mirror outcomes of each other."""
    mirror = {o.label: o.swapped().label for o in CompOutcome}
    rows = []
    ids = list(matrix.index)
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            forward, backward = matrix.loc[a, b], matrix.loc[b, a]
            if mirror[forward] != backward:
                rows.append({'f1': a, 'f2': b, 'forward': forward, 'backward': backward})
    return pd.DataFrame(rows, columns=['f1', 'f2', 'forward', 'backward'])


def export_matrix(matrix: pd.DataFrame, output_path: Union[str, Path]) -> str:
    path = Path(output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    matrix.to_csv(path)
    logger.info(f"Comparison matrix written to {path}")
    return str(path)
