"""
Outlier-Degree scoring from high-confidence association rules.

A rule X -> Y is violated by a row that contains X but not all of Y. Each
violation adds confidence(X -> Y) * |Y \\ t| / |Y|; high totals are anomalous.
"""

from fractions import Fraction
from typing import List, Optional

import numpy as np

from ..models.context_models import Context
from ..models.scoring_models import Polarity, Rule, Score, ScoreVector
from ..utils.deadline import Deadline, ensure_deadline
from ..utils.logging import get_logger
from .avf import resolve_precision
from .fpof import mask_to_rows
from .itemsets import Threshold, mine_frequent, mine_rules

logger = get_logger("provad.od")


def rule_violation_scores(ctx: Context, rules: List[Rule], rational: bool,
                          deadline: Optional[Deadline] = None) -> List[Score]:
    """Per row, the confidence-weighted fraction of each violated rule's consequent that is missing."""
    deadline = ensure_deadline(deadline)
    masks = ctx.attribute_masks()
    all_rows = (1 << ctx.n) - 1
    exact: List[Fraction] = [Fraction(0)] * ctx.n if rational else []
    approx = np.zeros(ctx.n, dtype=np.float64)

    for rule in rules:
        deadline.check()
        covered = all_rows
        for j in rule.antecedent:
            covered &= masks[j]
        if not covered:
            continue
        weight = rule.confidence / len(rule.consequent)
        for y in rule.consequent:
            # rows holding the antecedent but missing y
            missing = covered & ~masks[y] & all_rows
            if not missing:
                continue
            hit = mask_to_rows(missing, ctx.n)
            if rational:
                for i in np.flatnonzero(hit):
                    exact[i] += weight
            else:
                approx[hit] += float(weight)

    if rational:
        return list(exact)
    return [float(v) for v in approx]


def od_scores(ctx: Context, minsupp: Threshold, minconf: Threshold, precision: Optional[str] = None,
              max_itemsets: Optional[int] = None, deadline: Optional[Deadline] = None) -> ScoreVector:
    """Score rows by violated association rules; high is anomalous."""
    ctx.require_attributes("od_scores")
    rational = resolve_precision(precision)
    frequent = mine_frequent(ctx, minsupp, max_itemsets=max_itemsets, deadline=deadline)
    rules = mine_rules(frequent, minconf, deadline=deadline)
    params = {"minsupp": float(minsupp), "minconf": float(minconf),
              "precision": "rational" if rational else "float", "rules": len(rules)}

    if not rules:
        note = f"no rules at minsupp={minsupp}, minconf={minconf}; all scores are 0"
        logger.warning(note, context=ctx.name)
        zero: Score = Fraction(0) if rational else 0.0
        return ScoreVector(ctx.row_ids, [zero] * ctx.n, Polarity.HIGH_IS_ANOMALOUS, "od", params, (note,))

    scores = rule_violation_scores(ctx, rules, rational, deadline)
    return ScoreVector(ctx.row_ids, scores, Polarity.HIGH_IS_ANOMALOUS, "od", params)
