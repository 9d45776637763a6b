"""
CompreX-style partitioned compression scoring.

Attributes are split into groups that are compressed separately, each with
its own Krimp code table over the group's projection. The search starts
from singleton groups and repeatedly performs the merge of two groups that
lowers the total encoded size the most. Candidate pairs per round are
limited to the top-k by mutual information between the groups' attributes,
and the number of encoder builds is bounded by a budget; when the budget
runs out the current partition is returned and flagged.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from ..config.config import get_config
from ..models.context_models import Context
from ..models.scoring_models import Polarity, ScoreVector
from ..utils.deadline import Deadline, ensure_deadline
from ..utils.exceptions import InternalInvariantError
from ..utils.logging import get_logger
from .krimp import CodeTable, KrimpSettings, empty_row_note, krimp_build

logger = get_logger("provad.comprex")

Group = Tuple[int, ...]


@dataclass
class ComprexModel:
    """A partition of the attributes with one code table per group."""

    partition: List[Group]
    tables: List[CodeTable]
    cost_trace: List[float] = field(default_factory=list)
    budget_exhausted: bool = False
    evaluations: int = 0

    @property
    def total_cost(self) -> float:
        return sum(table.total_size() for table in self.tables)


def validate_partition(partition: Sequence[Sequence[int]], m: int) -> None:
    """Groups must be non-empty, disjoint and cover all m attributes."""
    seen: List[int] = []
    for group in partition:
        if not group:
            raise InternalInvariantError("empty attribute group", invariant="no empty group")
        seen.extend(group)
    if len(seen) != len(set(seen)):
        raise InternalInvariantError("attribute groups overlap", invariant="disjoint groups")
    if sorted(seen) != list(range(m)):
        raise InternalInvariantError("attribute groups do not cover every attribute", invariant="coverage")


def comprex_settings(absent_values: Optional[bool] = None) -> KrimpSettings:
    """Group encoder settings: krimp knobs with the comprex absent-value choice."""
    if absent_values is None:
        absent_values = get_config().comprex.absent_values
    return KrimpSettings.from_config(absent_values=absent_values)


def mutual_information_matrix(ctx: Context) -> np.ndarray:
    """Pairwise mutual information (bits) between the binary attributes."""
    n, m = ctx.n, ctx.m
    if n == 0:
        return np.zeros((m, m))
    x = ctx.to_dense(dtype=np.float64)
    ones = x.sum(axis=0)
    both = x.T @ x
    joint = np.stack([
        n - ones[:, None] - ones[None, :] + both,  # 0,0
        ones[None, :] - both,                      # 0,1
        ones[:, None] - both,                      # 1,0
        both,                                      # 1,1
    ]) / n
    p1 = ones / n
    marginal_a = np.stack([1 - p1, 1 - p1, p1, p1])[:, :, None]
    marginal_b = np.stack([1 - p1, p1, 1 - p1, p1])[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = joint * np.log2(joint / (marginal_a * marginal_b))
    mi = np.nansum(np.where(joint > 0, terms, 0.0), axis=0)
    np.fill_diagonal(mi, 0.0)
    return np.maximum(mi, 0.0)


class _GroupEncoder:
    """Builds and caches code tables per attribute group."""

    def __init__(self, ctx: Context, settings: KrimpSettings, deadline: Deadline):
        self.ctx = ctx
        self.settings = settings
        self.deadline = deadline
        self.tables: Dict[FrozenSet[int], CodeTable] = {}

    def table(self, group: Group) -> CodeTable:
        key = frozenset(group)
        if key not in self.tables:
            projection = self.ctx.project(sorted(group), name=f"{self.ctx.name}[{len(group)}]")
            self.tables[key] = krimp_build(projection, settings=self.settings, deadline=self.deadline)
        return self.tables[key]

    def is_cached(self, group: Group) -> bool:
        return frozenset(group) in self.tables

    def cost(self, group: Group) -> float:
        return self.table(group).total_size()


def fit_partition(ctx: Context, partition: Sequence[Sequence[int]], absent_values: Optional[bool] = None,
                  deadline: Optional[Deadline] = None) -> ComprexModel:
    """Code tables for a fixed partition."""
    ctx.require_attributes("comprex")
    groups = [tuple(sorted(g)) for g in partition]
    validate_partition(groups, ctx.m)
    encoder = _GroupEncoder(ctx, comprex_settings(absent_values), ensure_deadline(deadline))
    tables = [encoder.table(g) for g in groups]
    model = ComprexModel(groups, tables, evaluations=len(groups))
    model.cost_trace.append(model.total_cost)
    return model


def comprex_build(ctx: Context, budget: Optional[int] = None, absent_values: Optional[bool] = None,
                  top_k: Optional[int] = None, deadline: Optional[Deadline] = None) -> ComprexModel:
    """
    Greedy merge search over attribute partitions.

    Args:
        ctx: Context to compress
        budget: Maximum number of pair evaluations (defaults to
            budget_per_attribute * m)
        absent_values: Encode zeros explicitly in the group encoders
        top_k: Candidate pairs evaluated per round, by mutual information
        deadline: Optional cooperative deadline

    Returns:
        ComprexModel with the final partition, its code tables and the cost
        after every merge
    """
    ctx.require_attributes("comprex_build")
    section = get_config().comprex
    budget = section.budget_per_attribute * ctx.m if budget is None else budget
    top_k = section.mi_top_k if top_k is None else top_k
    deadline = ensure_deadline(deadline)
    encoder = _GroupEncoder(ctx, comprex_settings(absent_values), deadline)

    partition: List[Group] = [(j,) for j in range(ctx.m)]
    costs = {g: encoder.cost(g) for g in partition}
    trace = [sum(costs.values())]
    mi = mutual_information_matrix(ctx)
    evaluations = 0
    exhausted = False

    while len(partition) > 1 and not exhausted:
        pairs = []
        for a, b in combinations(range(len(partition)), 2):
            ga, gb = partition[a], partition[b]
            affinity = float(mi[np.ix_(ga, gb)].max())
            pairs.append((-affinity, ga, gb))
        pairs.sort()

        best: Optional[Tuple[float, Group, Group, Group]] = None
        for _, ga, gb in pairs[:top_k]:
            deadline.check()
            merged = tuple(sorted(ga + gb))
            if not encoder.is_cached(merged):
                if evaluations >= budget:
                    exhausted = True
                    break
                evaluations += 1
            delta = encoder.cost(merged) - costs[ga] - costs[gb]
            if delta < 0 and (best is None or delta < best[0]):
                best = (delta, ga, gb, merged)

        if best is None:
            break
        _, ga, gb, merged = best
        partition = [g for g in partition if g not in (ga, gb)] + [merged]
        partition.sort()
        validate_partition(partition, ctx.m)
        costs[merged] = encoder.cost(merged)
        trace.append(sum(costs[g] for g in partition))
        logger.debug("Merged attribute groups", left=ga, right=gb, gain=round(-best[0], 3),
                     groups=len(partition))

    if exhausted:
        logger.warning(f"comprex search budget of {budget} evaluations exhausted; "
                       "returning the current partition", context=ctx.name, groups=len(partition))

    tables = [encoder.table(g) for g in partition]
    return ComprexModel(partition, tables, trace, exhausted, evaluations)


def score_with_model(ctx: Context, model: ComprexModel) -> Tuple[List[float], List[int]]:
    """Sum over groups of each row's encoded projection; empty rows score 0."""
    scores: List[float] = []
    empty: List[int] = []
    for i, row in enumerate(ctx.rows):
        if not row:
            scores.append(0.0)
            empty.append(i)
            continue
        total = 0.0
        for group, table in zip(model.partition, model.tables):
            local = [k for k, j in enumerate(group) if j in row]
            total += table.encoded_length(table.row_bits(local))
        scores.append(total)
    return scores, empty


def comprex_scores(ctx: Context, budget: Optional[int] = None, absent_values: Optional[bool] = None,
                   model: Optional[ComprexModel] = None, deadline: Optional[Deadline] = None) -> ScoreVector:
    """Encoded size of each row under the partitioned model; high is anomalous."""
    if model is None:
        model = comprex_build(ctx, budget=budget, absent_values=absent_values, deadline=deadline)
    scores, empty = score_with_model(ctx, model)
    notes = list(empty_row_note(ctx, empty))
    if model.budget_exhausted:
        notes.append(f"search budget exhausted after {model.evaluations} evaluations (anytime result)")
    params = {
        "groups": len(model.partition),
        "evaluations": model.evaluations,
        "budget_exhausted": model.budget_exhausted,
    }
    return ScoreVector(ctx.row_ids, scores, Polarity.HIGH_IS_ANOMALOUS, "comprex", params, notes)
