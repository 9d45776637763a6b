"""
Tests for partitioned compression scoring.
"""

import random

import numpy as np
import pytest

from src.business.comprex import (comprex_build, comprex_scores, fit_partition, mutual_information_matrix,
                                  validate_partition)
from src.business.krimp import KrimpSettings, oc3_scores
from src.models.context_models import Context
from src.models.scoring_models import Polarity
from src.utils.exceptions import InternalInvariantError

from conftest import make_random_context


def _correlated_context(n=200, seed=5):
    """Attributes 0 and 1 always agree; 2 and 3 are independent noise."""
    rng = random.Random(seed)
    rows = []
    for _ in range(n):
        row = {0, 1} if rng.random() < 0.5 else set()
        if rng.random() < 0.3:
            row.add(2)
        if rng.random() < 0.6:
            row.add(3)
        rows.append(frozenset(row))
    return Context("correlated", ("a", "b", "c", "d"), tuple(f"r{i}" for i in range(n)), tuple(rows))


def test_single_group_equals_oc3():
    """One group over every attribute is plain OC3 with zeros encoded."""
    for seed in range(10):
        ctx = make_random_context(seed, n=20, m=5)
        model = fit_partition(ctx, [list(range(ctx.m))], absent_values=True)
        grouped = comprex_scores(ctx, model=model)
        plain = oc3_scores(ctx, settings=KrimpSettings(absent_values=True))
        assert grouped.scores == plain.scores


def test_correlated_pair_is_merged():
    ctx = _correlated_context()
    model = comprex_build(ctx)
    assert any({0, 1} <= set(group) for group in model.partition)
    assert len(model.partition) < ctx.m


def test_cost_trace_never_increases():
    for ctx in (_correlated_context(), make_random_context(3, n=40, m=6, density=0.5)):
        trace = comprex_build(ctx).cost_trace
        assert all(later <= earlier for earlier, later in zip(trace, trace[1:]))


def test_single_attribute_context():
    ctx = Context("one", ("a",), ("r0", "r1", "r2"), (frozenset({0}), frozenset(), frozenset({0})))
    model = comprex_build(ctx)
    assert model.partition == [(0,)]
    scores = comprex_scores(ctx, model=model)
    assert scores.polarity is Polarity.HIGH_IS_ANOMALOUS
    assert scores.scores[1] == 0.0
    assert "r1" in scores.notes[0]


def test_budget_exhaustion_returns_partial_result():
    ctx = _correlated_context()
    scores = comprex_scores(ctx, budget=0)
    assert scores.params["budget_exhausted"] is True
    assert scores.params["groups"] == ctx.m
    assert any("budget exhausted" in note for note in scores.notes)


def test_partition_validation():
    validate_partition([(0, 2), (1,)], 3)
    for bad in ([(0,), (0, 1), (2,)], [(0,), (1,)], [(0, 1, 2), ()]):
        with pytest.raises(InternalInvariantError):
            validate_partition(bad, 3)


def test_mutual_information_of_identical_columns():
    """Identical balanced columns share one bit; independent ones share none."""
    rows = [frozenset({0, 1, 2}), frozenset({0, 1}), frozenset({2}), frozenset()]
    ctx = Context("mi", ("a", "b", "c"), ("r0", "r1", "r2", "r3"), tuple(rows))
    mi = mutual_information_matrix(ctx)
    assert mi[0, 1] == pytest.approx(1.0)
    assert mi[0, 2] == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(mi, mi.T)


def test_independent_columns_stay_apart():
    for seed in range(5):
        ctx = make_random_context(seed, n=200, m=4, density=0.5)
        model = comprex_build(ctx, absent_values=True)
        assert model.partition == [(0,), (1,), (2,), (3,)]


def test_rows_breaking_a_joint_pattern_rank_on_top():
    """Two of 200 rows split an otherwise inseparable pair of attributes."""
    ctx = _correlated_context()
    rows = list(ctx.rows)
    rows[17] = (rows[17] - {0, 1}) | {0}
    rows[123] = (rows[123] - {0, 1}) | {1}
    planted = Context(ctx.name, ctx.attributes, ctx.row_ids, tuple(rows))
    scores = comprex_scores(planted, absent_values=True)
    top = sorted(range(planted.n), key=lambda i: -scores.scores[i])[:3]
    assert {17, 123} <= set(top)
