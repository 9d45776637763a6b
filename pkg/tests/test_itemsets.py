"""
Tests for frequent, closed itemset and association rule mining.
"""

from fractions import Fraction
from itertools import combinations

import pytest

from src.business.itemsets import as_fraction, min_support_count, mine_closed, mine_frequent, mine_rules
from src.utils.exceptions import ContractViolationError, ResourceLimitError

from conftest import make_random_context


def _support(ctx, items):
    return sum(1 for row in ctx.rows if set(items) <= row)


def _frequent_oracle(ctx, minsupp):
    found = {}
    for size in range(1, ctx.m + 1):
        for items in combinations(range(ctx.m), size):
            s = _support(ctx, items)
            if s and Fraction(s, ctx.n) >= minsupp:
                found[items] = s
    return found


def _closed_oracle(ctx, minsupp):
    frequent = _frequent_oracle(ctx, minsupp)
    return {items: s for items, s in frequent.items()
            if not any(set(items) < set(other) and s == t for other, t in frequent.items())}


def _rules_oracle(ctx, minsupp, minconf):
    frequent = _frequent_oracle(ctx, minsupp)
    rules = set()
    for items, s in frequent.items():
        for size in range(1, len(items)):
            for antecedent in combinations(items, size):
                confidence = Fraction(s, frequent[antecedent])
                if confidence >= minconf:
                    consequent = tuple(i for i in items if i not in antecedent)
                    rules.add((antecedent, consequent, s, confidence))
    return rules


def _random_contexts():
    for seed in range(100):
        yield make_random_context(seed, n=5 + seed % 45, m=2 + seed % 9, density=0.3 + (seed % 5) / 10)


def test_running_example_frequent_order(running_example):
    """Support desc, then length, then items."""
    ctx, _ = running_example
    frequent = mine_frequent(ctx, 0.5)
    assert [(f.items, f.support) for f in frequent] == [((0,), 3), ((1,), 3), ((0, 1), 3), ((2,), 2)]


def test_running_example_closed(running_example):
    ctx, _ = running_example
    closed = mine_closed(ctx, 0.5)
    assert [(c.items, c.support) for c in closed] == [((0, 1), 3), ((2,), 2)]


def test_running_example_rules(running_example):
    """abc.com and xyz.com always come together."""
    ctx, _ = running_example
    rules = mine_rules(mine_frequent(ctx, 0.5), 0.9)
    assert {(r.antecedent, r.consequent, r.confidence) for r in rules} == {
        ((0,), (1,), Fraction(1)), ((1,), (0,), Fraction(1))}


def test_frequent_matches_exhaustive_enumeration():
    for ctx in _random_contexts():
        for minsupp in (Fraction(1, 5), Fraction(2, 5)):
            mined = {f.items: f.support for f in mine_frequent(ctx, minsupp)}
            assert mined == _frequent_oracle(ctx, minsupp)


def test_closed_matches_closure_filter():
    for ctx in _random_contexts():
        for minsupp in (Fraction(1, 5), Fraction(2, 5)):
            mined = {c.items: c.support for c in mine_closed(ctx, minsupp)}
            assert mined == _closed_oracle(ctx, minsupp)


def test_rules_match_exhaustive_enumeration():
    for ctx in _random_contexts():
        minsupp, minconf = Fraction(1, 5), Fraction(3, 5)
        mined = {(r.antecedent, r.consequent, r.support, r.confidence)
                 for r in mine_rules(mine_frequent(ctx, minsupp), minconf)}
        assert mined == _rules_oracle(ctx, minsupp, minconf)


def test_support_threshold_is_inclusive():
    """An itemset at exactly minsupp * n is frequent."""
    assert min_support_count(0.5, 4) == 2
    assert min_support_count(Fraction(1, 3), 4) == 2
    assert min_support_count(0.1, 10) == 1


def test_decimal_thresholds_stay_exact():
    assert as_fraction(0.1, "minsupp") == Fraction(1, 10)
    with pytest.raises(ContractViolationError):
        as_fraction(0, "minsupp")
    with pytest.raises(ContractViolationError):
        as_fraction(1.5, "minconf")


def test_rules_reject_closed_only_input(running_example):
    """Closed itemsets lack antecedent supports."""
    ctx, _ = running_example
    with pytest.raises(ContractViolationError):
        mine_rules(mine_closed(ctx, 0.5), 0.5)


def test_itemset_cap_raises_resource_limit():
    ctx = make_random_context(1, n=20, m=8, density=0.8)
    with pytest.raises(ResourceLimitError) as excinfo:
        mine_frequent(ctx, Fraction(1, 20), max_itemsets=5)
    assert excinfo.value.limit_name == "max_itemsets"


def test_empty_context_mines_nothing():
    ctx = make_random_context(0, n=0, m=3)
    assert mine_frequent(ctx, 0.5) == []
    assert mine_closed(ctx, 0.5) == []


def test_frequent_itemsets_agree_with_fpgrowth():
    """Dyadic supports are exact in floats, so the two miners must agree."""
    pd = pytest.importorskip("pandas")
    frequent_patterns = pytest.importorskip("mlxtend.frequent_patterns")
    for seed in range(20):
        ctx = make_random_context(seed, n=16, m=2 + seed % 5, density=0.5)
        onehot = pd.DataFrame([[j in row for j in range(ctx.m)] for row in ctx.rows], columns=list(ctx.attributes))
        reference = frequent_patterns.fpgrowth(onehot, min_support=0.25, use_colnames=False)
        expected = {tuple(sorted(items)): round(support * ctx.n)
                    for items, support in zip(reference["itemsets"], reference["support"])}
        mined = {f.items: f.support for f in mine_frequent(ctx, Fraction(1, 4))}
        assert mined == expected
