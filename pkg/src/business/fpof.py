"""
Frequent Pattern Outlier Factor scoring.

A row's score is the sum of the support fractions of the frequent itemsets
it contains, divided by the number of frequent itemsets. Rows containing
few frequent patterns score low and are the anomalies.
"""

from fractions import Fraction
from typing import List, Optional

import numpy as np

from ..models.context_models import Context
from ..models.scoring_models import Itemset, Polarity, Score, ScoreVector
from ..utils.deadline import Deadline, ensure_deadline
from ..utils.logging import get_logger
from .avf import resolve_precision
from .itemsets import Threshold, mine_frequent

logger = get_logger("provad.fpof")


def mask_to_rows(mask: int, n: int) -> np.ndarray:
    """Boolean row vector of an int bitmask (bit i is row i)."""
    raw = np.frombuffer(mask.to_bytes((n + 7) // 8 or 1, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def contained_support_sums(ctx: Context, itemsets: List[Itemset], deadline: Optional[Deadline] = None) -> List[int]:
    """Per row, the summed support counts of the given itemsets it contains."""
    deadline = ensure_deadline(deadline)
    totals = np.zeros(ctx.n, dtype=np.int64)
    attribute_masks = None
    for itemset in itemsets:
        deadline.check()
        mask = itemset.mask
        if mask is None:
            attribute_masks = attribute_masks or ctx.attribute_masks()
            mask = (1 << ctx.n) - 1
            for j in itemset.items:
                mask &= attribute_masks[j]
        totals[mask_to_rows(mask, ctx.n)] += itemset.support
    return [int(t) for t in totals]


def fpof_scores(ctx: Context, minsupp: Threshold, precision: Optional[str] = None,
                max_itemsets: Optional[int] = None, deadline: Optional[Deadline] = None) -> ScoreVector:
    """Score rows by the frequent itemsets they contain; low is anomalous."""
    ctx.require_attributes("fpof_scores")
    rational = resolve_precision(precision)
    frequent = mine_frequent(ctx, minsupp, max_itemsets=max_itemsets, deadline=deadline)
    params = {"minsupp": float(minsupp) if not isinstance(minsupp, str) else minsupp,
              "precision": "rational" if rational else "float"}

    if not frequent:
        note = f"no frequent itemsets at minsupp={minsupp}; all scores are 0"
        logger.warning(note, context=ctx.name)
        zero: Score = Fraction(0) if rational else 0.0
        return ScoreVector(ctx.row_ids, [zero] * ctx.n, Polarity.LOW_IS_ANOMALOUS, "fpof", params, (note,))

    sums = contained_support_sums(ctx, frequent, deadline)
    # support fraction = support / n, averaged over |F|
    denominator = ctx.n * len(frequent)
    if rational:
        scores: List[Score] = [Fraction(s, denominator) for s in sums]
    else:
        scores = [s / denominator for s in sums]
    params["itemsets"] = len(frequent)
    return ScoreVector(ctx.row_ids, scores, Polarity.LOW_IS_ANOMALOUS, "fpof", params)
