"""
Ranking construction and ranking quality metrics.

Rankings put the most anomalous row at position 1 regardless of the
scorer's polarity. nDCG and AUC use binary relevance (1 = attack).
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..models.context_models import GroundTruth
from ..models.scoring_models import Polarity, Ranking, ScoreVector, TiePolicy
from ..utils.exceptions import UndefinedMetricError
from ..utils.logging import get_logger

logger = get_logger("provad.metrics")


def rank(scores: ScoreVector, truth: Optional[GroundTruth] = None,
         tie_policy: TiePolicy = TiePolicy.STABLE) -> Ranking:
    """Order rows from most to least anomalous; ties keep input order."""
    truth = truth or GroundTruth(frozenset())
    descending = scores.polarity is Polarity.HIGH_IS_ANOMALOUS
    # sorted() stays stable with reverse=True, so ties keep context order
    indices = sorted(range(len(scores)), key=lambda i: scores.scores[i], reverse=descending)

    unmatched = truth.unmatched(scores.row_ids)
    if unmatched:
        logger.warning(f"{len(unmatched)} ground-truth ids are not scored rows", sample=unmatched[:5])

    row_ids = tuple(scores.row_ids[i] for i in indices)
    return Ranking(
        row_ids=row_ids,
        scores=tuple(scores.scores[i] for i in indices),
        labels=tuple(truth.labels(row_ids)),
        polarity=scores.polarity,
        tie_policy=tie_policy,
        unmatched=tuple(unmatched),
    )


def _require_attacks(r: Ranking, metric: str) -> int:
    k = r.attack_count
    if k == 0:
        raise UndefinedMetricError(f"{metric} is undefined without any attack row", metric=metric)
    return k


def _discount(position: int) -> float:
    return 1.0 / math.log2(position + 1)


def ideal_dcg(k: int) -> float:
    return sum(_discount(i) for i in range(1, k + 1))


def ndcg(r: Ranking) -> float:
    """
    Normalized discounted cumulative gain of the attack rows.

    Under AVERAGE_RANK, rows in a tie group share the mean discount of the
    positions the group occupies (the expected DCG over orderings of the tie).
    """
    k = _require_attacks(r, "ndcg")
    if r.tie_policy is TiePolicy.AVERAGE_RANK:
        dcg = 0.0
        for start, end in r.tie_groups():
            hits = sum(r.labels[start:end])
            if hits:
                mean_discount = sum(_discount(p) for p in range(start + 1, end + 1)) / (end - start)
                dcg += hits * mean_discount
    else:
        dcg = sum(_discount(p) for p, label in enumerate(r.labels, start=1) if label)
    return dcg / ideal_dcg(k)


def auc(r: Ranking) -> float:
    """
    Fraction of (attack, normal) pairs with the attack ranked above the normal row.

    Under AVERAGE_RANK tied pairs earn half credit; under STABLE the
    positional order decides every pair.
    """
    k = _require_attacks(r, "auc")
    normals = len(r) - k
    if normals == 0:
        raise UndefinedMetricError("auc is undefined without any normal row", metric="auc")

    credit = 0.0
    normals_above = 0
    if r.tie_policy is TiePolicy.AVERAGE_RANK:
        for start, end in r.tie_groups():
            group_attacks = sum(r.labels[start:end])
            group_normals = (end - start) - group_attacks
            credit += group_attacks * (normals - normals_above - group_normals)
            credit += 0.5 * group_attacks * group_normals
            normals_above += group_normals
    else:
        for label in r.labels:
            if label:
                credit += normals - normals_above
            else:
                normals_above += 1
    return credit / (k * normals)


def tp_curve(r: Ranking) -> List[Tuple[float, float]]:
    """(fraction of rows inspected, fraction of attacks found) after each position."""
    n = len(r)
    if n == 0:
        return []
    labels = np.asarray(r.labels, dtype=np.int64)
    found = np.cumsum(labels)
    k = int(found[-1])
    xs = np.arange(1, n + 1) / n
    ys = found / k if k else np.ones(n)
    return [(float(x), float(y)) for x, y in zip(xs, ys)]


def curve_value_at(curve: Sequence[Tuple[float, float]], fraction: float) -> float:
    """Fraction of attacks found once ``fraction`` of the rows have been inspected."""
    value = 0.0
    for x, y in curve:
        if x <= fraction + 1e-12:
            value = y
        else:
            break
    return value


def band_positions(r: Ranking) -> List[int]:
    """Sorted 1-based positions of the attack rows."""
    return [p for p, label in enumerate(r.labels, start=1) if label]


def ranks_of(r: Ranking, row_ids: Sequence[str]) -> List[int]:
    """1-based positions of the given rows."""
    position = {row_id: p for p, row_id in enumerate(r.row_ids, start=1)}
    return [position[row_id] for row_id in row_ids]


def ranking_metrics(r: Ranking, tie_policy: Optional[TiePolicy] = None) -> Tuple[float, float]:
    """
    nDCG and AUC of a ranking.

    Without an explicit policy nDCG is read STABLE and AUC AVERAGE_RANK.
    """
    ndcg_policy = tie_policy or TiePolicy.STABLE
    auc_policy = tie_policy or TiePolicy.AVERAGE_RANK
    return ndcg(r.with_tie_policy(ndcg_policy)), auc(r.with_tie_policy(auc_policy))
