"""
Frequent itemset, closed itemset and association rule mining.

Transactions are held vertically: one int bitmask of row positions per
attribute, so the support of an itemset is the popcount of the AND of its
members' masks. Frequent itemsets are enumerated depth-first (Eclat);
closed itemsets by prefix-preserving closure extension (LCM), which never
materializes the non-closed sets.
"""

from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple, Union

from ..config.config import get_config
from ..models.context_models import Context
from ..models.scoring_models import Itemset, Rule
from ..utils.deadline import Deadline, ensure_deadline
from ..utils.exceptions import ContractViolationError, ResourceLimitError
from ..utils.logging import get_logger

logger = get_logger("provad.itemsets")

Threshold = Union[float, Fraction, int, str]


def as_fraction(value: Threshold, name: str) -> Fraction:
    """Exact form of a threshold in (0, 1]; decimal floats keep their printed value."""
    try:
        fraction = value if isinstance(value, Fraction) else Fraction(str(value))
    except (ValueError, ZeroDivisionError):
        raise ContractViolationError(f"{name} must be a number", parameter=name, value=value)
    if not 0 < fraction <= 1:
        raise ContractViolationError(f"{name} must lie in (0, 1], got {value}", parameter=name, value=value)
    return fraction


def min_support_count(minsupp: Threshold, n: int) -> int:
    """Smallest integer support s with s/n >= minsupp."""
    fraction = as_fraction(minsupp, "minsupp")
    return -((-fraction.numerator * n) // fraction.denominator)


def _itemset_order(itemset: Itemset) -> Tuple[int, int, Tuple[int, ...]]:
    return (-itemset.support, len(itemset.items), itemset.items)


class _Collector:
    """Accumulates mined itemsets under the configured cap."""

    def __init__(self, n: int, max_itemsets: Optional[int], deadline: Deadline):
        self.n = n
        self.max_itemsets = max_itemsets if max_itemsets is not None else get_config().mining.max_itemsets
        self.deadline = deadline
        self.found: List[Itemset] = []

    def add(self, items: Tuple[int, ...], mask: int, support: int) -> None:
        self.deadline.check()
        if len(self.found) >= self.max_itemsets:
            raise ResourceLimitError(f"itemset mining exceeded the cap of {self.max_itemsets} itemsets",
                                     limit_name="max_itemsets", limit_value=self.max_itemsets)
        self.found.append(Itemset(items, support, self.n, mask))

    def result(self) -> List[Itemset]:
        return sorted(self.found, key=_itemset_order)


def mine_frequent(ctx: Context, minsupp: Threshold, max_itemsets: Optional[int] = None,
                  deadline: Optional[Deadline] = None) -> List[Itemset]:
    """
    All itemsets whose support fraction is at least ``minsupp``.

    Args:
        ctx: Context to mine
        minsupp: Support threshold in (0, 1]; equality is included
        max_itemsets: Cap on the output size (defaults to the mining configuration)
        deadline: Optional cooperative deadline

    Returns:
        Itemsets ordered by support desc, length asc, then items
    """
    min_count = min_support_count(minsupp, ctx.n)
    if ctx.n == 0:
        return []
    collector = _Collector(ctx.n, max_itemsets, ensure_deadline(deadline))

    masks = ctx.attribute_masks()
    frequent_items = [(j, mask) for j, mask in enumerate(masks) if mask.bit_count() >= min_count]

    # Depth-first over prefix classes; each stack entry is (prefix, extensions)
    stack: List[Tuple[Tuple[int, ...], List[Tuple[int, int]]]] = [((), frequent_items)]
    while stack:
        prefix, extensions = stack.pop()
        for position, (j, mask) in enumerate(extensions):
            items = prefix + (j,)
            collector.add(items, mask, mask.bit_count())
            children = []
            for k, other in extensions[position + 1:]:
                joint = mask & other
                if joint.bit_count() >= min_count:
                    children.append((k, joint))
            if children:
                stack.append((items, children))

    result = collector.result()
    logger.debug("Mined frequent itemsets", minsupp=str(minsupp), min_count=min_count, found=len(result))
    return result


def mine_closed(ctx: Context, minsupp: Threshold, max_itemsets: Optional[int] = None,
                deadline: Optional[Deadline] = None) -> List[Itemset]:
    """Frequent itemsets with no proper superset of equal support."""
    min_count = min_support_count(minsupp, ctx.n)
    if ctx.n == 0:
        return []
    deadline = ensure_deadline(deadline)
    collector = _Collector(ctx.n, max_itemsets, deadline)

    masks = ctx.attribute_masks()
    # Infrequent attributes can never belong to the closure of a frequent set
    frequent = [(j, masks[j]) for j in range(ctx.m) if masks[j].bit_count() >= min_count]

    def closure(tidmask: int) -> Tuple[int, ...]:
        return tuple(j for j, mask in frequent if mask & tidmask == tidmask)

    all_rows = (1 << ctx.n) - 1
    root = closure(all_rows)
    if root:
        collector.add(root, all_rows, ctx.n)

    stack: List[Tuple[Tuple[int, ...], int, int]] = [(root, all_rows, -1)]
    while stack:
        items, tidmask, core = stack.pop()
        present = set(items)
        for j, mask in frequent:
            if j <= core or j in present:
                continue
            joint = tidmask & mask
            support = joint.bit_count()
            if support < min_count:
                continue
            deadline.check()
            closed = closure(joint)
            # Prefix-preserving check: the closure may not add items below j
            if tuple(i for i in closed if i < j) != tuple(i for i in items if i < j):
                continue
            collector.add(closed, joint, support)
            stack.append((closed, joint, j))

    result = collector.result()
    logger.debug("Mined closed itemsets", minsupp=str(minsupp), min_count=min_count, found=len(result))
    return result


def mine_rules(frequents: Sequence[Itemset], minconf: Threshold,
               deadline: Optional[Deadline] = None) -> List[Rule]:
    """
    All rules X -> Y with X u Y frequent and confidence >= ``minconf``.

    ``frequents`` must be closed under subsets (the output of
    ``mine_frequent``); closed-only collections lack the antecedent supports.
    """
    threshold = as_fraction(minconf, "minconf")
    deadline = ensure_deadline(deadline)
    supports: Dict[Tuple[int, ...], int] = {itemset.items: itemset.support for itemset in frequents}

    for items in supports:
        if len(items) > 1:
            for missing in combinations(items, len(items) - 1):
                if missing not in supports:
                    raise ContractViolationError(
                        f"itemset {items} lacks its subset {missing}; rules need all frequent itemsets, "
                        "not only closed ones",
                        operation="mine_rules", parameter="frequents")

    rules: List[Rule] = []
    for items, support in supports.items():
        if len(items) < 2:
            continue
        for size in range(1, len(items)):
            for antecedent in combinations(items, size):
                deadline.check()
                confidence = Fraction(support, supports[antecedent])
                if confidence >= threshold:
                    consequent = tuple(i for i in items if i not in antecedent)
                    rules.append(Rule(antecedent, consequent, support, confidence))

    rules.sort(key=lambda r: (-r.confidence, -r.support, r.antecedent, r.consequent))
    logger.debug("Mined association rules", minconf=str(minconf), rules=len(rules))
    return rules
