"""
Tests for Frequent Pattern Outlier Factor scoring.
"""

import random
from fractions import Fraction
from itertools import combinations

from src.business.fpof import contained_support_sums, fpof_scores, mask_to_rows
from src.business.itemsets import mine_frequent
from src.business.metrics import rank
from src.models.context_models import Context
from src.models.scoring_models import Itemset, Polarity

from conftest import make_random_context


def _fpof_oracle(ctx, minsupp):
    frequent = []
    for size in range(1, ctx.m + 1):
        for items in combinations(range(ctx.m), size):
            s = sum(1 for row in ctx.rows if set(items) <= row)
            if Fraction(s, ctx.n) >= minsupp:
                frequent.append((set(items), Fraction(s, ctx.n)))
    if not frequent:
        return [Fraction(0)] * ctx.n
    return [sum((f for items, f in frequent if items <= row), Fraction(0)) / len(frequent) for row in ctx.rows]


def test_running_example(running_example):
    """P1337 only contains {evil.com}, the least supported frequent itemset."""
    ctx, truth = running_example
    scores = fpof_scores(ctx, 0.5, precision="rational")
    assert list(scores.scores) == [Fraction(9, 16), Fraction(9, 16), Fraction(1, 8), Fraction(11, 16)]
    assert min(scores.scores) == Fraction(1, 8)
    assert scores.polarity is Polarity.LOW_IS_ANOMALOUS
    assert scores.params["itemsets"] == 4
    assert rank(scores, truth).row_ids[0] == "P1337"


def test_matches_direct_formula():
    for seed in range(100):
        ctx = make_random_context(seed, n=4 + seed % 20, m=2 + seed % 6)
        minsupp = Fraction(1, 4)
        expected = _fpof_oracle(ctx, minsupp)
        assert list(fpof_scores(ctx, minsupp, precision="rational").scores) == expected
        floats = fpof_scores(ctx, minsupp, precision="float").scores
        assert all(abs(a - float(b)) <= 1e-12 for a, b in zip(floats, expected))


def test_no_frequent_itemsets_gives_zero_scores_with_note():
    ctx = Context("sparse", ("a", "b"), ("r0", "r1", "r2"), (frozenset({0}), frozenset({1}), frozenset()))
    scores = fpof_scores(ctx, 1.0, precision="rational")
    assert list(scores.scores) == [Fraction(0)] * 3
    assert scores.notes and "no frequent itemsets" in scores.notes[0]


def test_support_sums_without_masks(running_example):
    """Itemsets without a row mask are intersected from the attribute masks."""
    ctx, _ = running_example
    itemsets = [Itemset((0, 1), 3, 4), Itemset((2,), 2, 4)]
    assert contained_support_sums(ctx, itemsets) == [3, 3, 2, 5]


def test_mask_to_rows_is_little_endian():
    assert mask_to_rows(0b1010, 4).tolist() == [False, True, False, True]
    assert mask_to_rows(0, 3).tolist() == [False, False, False]


def test_adding_a_frequent_pattern_never_lowers_a_row():
    """Against a fixed frequent set, a row that gains items only gains support."""
    for seed in range(30):
        ctx = make_random_context(seed, n=15, m=5)
        # masks describe the original rows, so keep only items and supports
        frequent = [Itemset(f.items, f.support, f.n) for f in mine_frequent(ctx, Fraction(1, 5))]
        if not frequent:
            continue
        rng = random.Random(seed)
        i = rng.randrange(ctx.n)
        pattern = rng.choice(frequent)
        rows = list(ctx.rows)
        rows[i] = rows[i] | frozenset(pattern.items)
        grown = Context(ctx.name, ctx.attributes, ctx.row_ids, tuple(rows))

        before = contained_support_sums(ctx, frequent)
        after = contained_support_sums(grown, frequent)
        gained = 0 if set(pattern.items) <= ctx.rows[i] else pattern.support
        assert after[i] >= before[i] + gained
        assert after[:i] + after[i + 1:] == before[:i] + before[i + 1:]
