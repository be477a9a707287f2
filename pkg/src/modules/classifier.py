"""
Theta-class organization of complexity functions.

A class collects the functions f with c1*g(n) <= f(n) <= c2*g(n) for some
positive constants c1, c2 and all n beyond some n0, where g is the class
representative. Membership is decided by the comparator: two functions share
a class when the comparison returns EQUIVALENT.

Libraries are immutable values; classify, insert_function and refine return
new libraries.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from scipy.cluster.hierarchy import DisjointSet

from .comparator import (
    CompOutcome,
    CompResult,
    ComparatorConfig,
    ComplexityFn,
    DEFAULT_CONFIG,
    comp,
)
from ..utils.exceptions import ClassificationError
from ..utils.logger import log_execution_time
from ..utils.validators import validate_unique_ids

logger = logging.getLogger(__name__)

Comparator = Callable[[ComplexityFn, ComplexityFn], CompResult]
Member = Tuple[str, ComplexityFn]


@dataclass(frozen=True)
class ThetaClass:
    """Non-empty ordered member list; the first member is the representative."""
    members: Tuple[Member, ...]

    def __post_init__(self):
        if not self.members:
            raise ClassificationError("A theta class cannot be empty")

    @property
    def representative(self) -> Member:
        return self.members[0]

    @property
    def ids(self) -> List[str]:
        return [identifier for identifier, _ in self.members]

    def with_member(self, member: Member) -> 'ThetaClass':
        return ThetaClass(self.members + (member,))


@dataclass(frozen=True)
class ClassifiedLibrary:
    """Classes in ascending order of growth, with the configuration used to build them."""
    classes: Tuple[ThetaClass, ...] = ()
    config: ComparatorConfig = field(default=DEFAULT_CONFIG, compare=False)

    @property
    def ids(self) -> List[str]:
        return [identifier for cls in self.classes for identifier in cls.ids]

    def __len__(self) -> int:
        return len(self.classes)


class _MemoComparator:
    """Caches outcomes per ordered (id, id) pair for the duration of one operation."""

    def __init__(self, comparator: Comparator):
        self.comparator = comparator
        self.cache: Dict[Tuple[str, str], CompOutcome] = {}

    def __call__(self, a: Member, b: Member) -> CompOutcome:
        key = (a[0], b[0])
        if key not in self.cache:
            self.cache[key] = self.comparator(a[1], b[1]).outcome
        return self.cache[key]


def _default_comparator(cfg: ComparatorConfig) -> Comparator:
    return lambda f1, f2: comp(f1, f2, cfg)


def _check_unique(ids: Sequence[str]):
    result = validate_unique_ids(ids)
    if not result['valid']:
        raise ClassificationError("Duplicate function ids",
                                  {'duplicates': result['duplicates']})


def _placement(classes: Sequence[ThetaClass], member: Member, compare: _MemoComparator) -> int:
    """Index before the first class whose representative grows faster than `member`."""
    for index, cls in enumerate(classes):
        if compare(member, cls.representative) is CompOutcome.FIRST_SMALLER:
            return index
    return len(classes)


def _sort_classes(classes: Sequence[ThetaClass], compare: _MemoComparator) -> List[ThetaClass]:
    # insertion keeps EQUIVALENT and INCONCLUSIVE pairs in their original order
    ordered: List[ThetaClass] = []
    for cls in classes:
        ordered.insert(_placement(ordered, cls.representative, compare), cls)
    return ordered


@log_execution_time
def classify(fns: Sequence[Member], cfg: Optional[ComparatorConfig] = None,
             comparator: Optional[Comparator] = None) -> ClassifiedLibrary:
    """
    Partition functions into theta classes and sort the classes by growth.

    Seeds are visited in input order; each still-unassigned later function
    joins the seed's class when the comparison returns EQUIVALENT. Empty
    classes are dropped, the first member of each class represents it, and
    classes are ordered by comparing representatives (FIRST_SMALLER before,
    SECOND_SMALLER after, EQUIVALENT and INCONCLUSIVE keep their order).

    Args:
        fns: (id, function) pairs with unique ids
        cfg: Comparator configuration stored in the library
        comparator: Comparison callable (defaults to comp with cfg)

    Returns:
        ClassifiedLibrary

    Raises:
        ClassificationError: Duplicate ids
    """
    cfg = cfg or DEFAULT_CONFIG
    members = [(identifier, fn) for identifier, fn in fns]
    _check_unique([identifier for identifier, _ in members])
    compare = _MemoComparator(comparator or _default_comparator(cfg))

    assigned = [False] * len(members)
    classes: List[ThetaClass] = []
    for i, seed in enumerate(members):
        if assigned[i]:
            continue
        assigned[i] = True
        group = [seed]
        for j in range(i + 1, len(members)):
            if not assigned[j] and compare(seed, members[j]) is CompOutcome.EQUIVALENT:
                assigned[j] = True
                group.append(members[j])
        classes.append(ThetaClass(tuple(group)))

    ordered = _sort_classes(classes, compare)
    logger.info(f"Classified {len(members)} functions into {len(ordered)} classes "
                f"({len(compare.cache)} comparisons)")
    return ClassifiedLibrary(tuple(ordered), cfg)


def insert_function(lib: ClassifiedLibrary, identifier: str, fn: ComplexityFn,
                    comparator: Optional[Comparator] = None) -> ClassifiedLibrary:
    """
    Add one function to a classified library.

    The function joins the first class whose representative compares
    EQUIVALENT; otherwise a singleton class goes before the first class whose
    representative grows faster, or at the end.

    Raises:
        ClassificationError: identifier already present
    """
    if identifier in lib.ids:
        raise ClassificationError(f"Function id already present: {identifier}",
                                  {'id': identifier})
    compare = _MemoComparator(comparator or _default_comparator(lib.config))
    member = (identifier, fn)
    classes = list(lib.classes)

    for index, cls in enumerate(classes):
        if compare(member, cls.representative) is CompOutcome.EQUIVALENT:
            classes[index] = cls.with_member(member)
            logger.info(f"{identifier} joins class {index + 1} "
                        f"(representative {cls.representative[0]})")
            return ClassifiedLibrary(tuple(classes), lib.config)

    index = _placement(classes, member, compare)
    classes.insert(index, ThetaClass((member,)))
    logger.info(f"{identifier} opens class {index + 1}")
    return ClassifiedLibrary(tuple(classes), lib.config)


def refine(lib: ClassifiedLibrary, better: Comparator,
           cfg: Optional[ComparatorConfig] = None) -> ClassifiedLibrary:
    """
    Merge classes whose representatives compare EQUIVALENT under a better comparator.

    `better` must not contradict the comparator that built the library on
    EQUIVALENT, FIRST_SMALLER and SECOND_SMALLER; it may only replace
    INCONCLUSIVE outcomes. Merging uses the transitive closure of the
    pairwise links; merged members keep the order of their classes. The
    result is re-sorted under `better`.
    """
    compare = _MemoComparator(better)
    classes = list(lib.classes)
    links = DisjointSet(range(len(classes)))
    for i in range(len(classes)):
        for j in range(i + 1, len(classes)):
            if links.connected(i, j):
                continue
            if compare(classes[i].representative, classes[j].representative) is CompOutcome.EQUIVALENT:
                links.merge(i, j)

    merged: List[ThetaClass] = []
    seen = set()
    for i in range(len(classes)):
        root = links[i]
        if root in seen:
            continue
        seen.add(root)
        group = sorted(links.subset(i))
        members = tuple(m for index in group for m in classes[index].members)
        merged.append(ThetaClass(members))

    if len(merged) < len(classes):
        logger.info(f"Refinement merged {len(classes)} classes into {len(merged)}")
    ordered = _sort_classes(merged, compare)
    return ClassifiedLibrary(tuple(ordered), cfg or lib.config)


def render_classes(lib: ClassifiedLibrary) -> str:
    """One line per class: `class k: [id ...] (representative: id)`."""
    lines = []
    for index, cls in enumerate(lib.classes, start=1):
        lines.append(f"class {index}: [{' '.join(cls.ids)}] "
                     f"(representative: {cls.representative[0]})")
    return '\n'.join(lines)


def library_to_dict(lib: ClassifiedLibrary) -> Dict:
    return {
        'classes': [
            {
                'index': index,
                'representative': cls.representative[0],
                'members': [{'id': identifier, 'function': str(fn)}
                            for identifier, fn in cls.members],
            }
            for index, cls in enumerate(lib.classes, start=1)
        ],
        'config': lib.config.to_dict(),
    }
