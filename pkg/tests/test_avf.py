"""
Tests for batch, naive and normalized streaming AVF scoring.
"""

import time
from fractions import Fraction

import pytest

from src.business.avf import (AttributeCounts, StreamingAVF, avf_batch, avf_naive_stream, avf_stream,
                              counts_rescale)
from src.business.metrics import rank
from src.models.context_models import Context, GroundTruth
from src.models.scoring_models import Polarity
from src.utils.exceptions import ContractViolationError

from conftest import make_random_context

F = Fraction


def _avf_oracle(ctx):
    """Two-loop definition: mean over attributes of the frequency of the row's value."""
    scores = []
    for row in ctx.rows:
        total = 0
        for j in range(ctx.m):
            column = [1 if j in other else 0 for other in ctx.rows]
            value = 1 if j in row else 0
            total += sum(1 for v in column if v == value)
        scores.append(F(total, ctx.m))
    return scores


def _stream_oracle(ctx, block_size, p0=F(0)):
    """Per record: mean over attributes of q_j or 1 - q_j, q_j = (c_j + p0) / d."""
    scores = []
    for start in range(0, ctx.n, block_size):
        seen = ctx.rows[:start]
        for offset, row in enumerate(ctx.rows[start:start + block_size]):
            d = start + offset + 1
            total = F(0)
            for j in range(ctx.m):
                q = (sum(1 for other in seen if j in other) + p0) / d
                total += q if j in row else 1 - q
            scores.append(total / ctx.m)
    return scores


def test_batch_running_example(running_example):
    """Batch AVF reproduces the worked example exactly."""
    ctx, _ = running_example
    scores = avf_batch(ctx, precision="rational")
    assert list(scores.scores) == [F(8, 3), F(8, 3), F(4, 3), F(8, 3)]
    assert scores.polarity is Polarity.LOW_IS_ANOMALOUS


def test_naive_stream_running_example(running_example):
    """The unnormalized stream drifts upwards with the stream position."""
    ctx, _ = running_example
    assert list(avf_naive_stream(ctx, precision="rational").scores) == [F(1, 3), F(4, 3), F(2, 3), F(5, 3)]


def test_stream_running_example(running_example):
    """Normalized streaming AVF with one record per block."""
    ctx, _ = running_example
    scores = avf_stream(ctx, block_size=1, precision="rational")
    assert list(scores.scores) == [F(1, 3), F(2, 3), F(2, 9), F(5, 12)]
    assert scores.params["block_size"] == 1


def test_stream_running_example_block_two(running_example):
    """Records in a block share the counts frozen at the start of the block."""
    ctx, _ = running_example
    scores = avf_stream(ctx, block_size=2, precision="rational")
    assert list(scores.scores) == [F(1, 3), F(1, 3), F(2, 9), F(1, 3)]


def test_running_example_ranks_attack_first(running_example):
    """P1337 has the lowest batch score."""
    ctx, truth = running_example
    ranking = rank(avf_batch(ctx, precision="rational"), truth)
    assert ranking.row_ids[0] == "P1337"


def test_batch_matches_oracle_on_random_contexts():
    """Sparse closed form equals the two-loop definition."""
    for seed in range(100):
        ctx = make_random_context(seed, n=1 + seed % 15, m=1 + seed % 7)
        assert list(avf_batch(ctx, precision="rational").scores) == _avf_oracle(ctx)
        floats = avf_batch(ctx, precision="float").scores
        for value, expected in zip(floats, _avf_oracle(ctx)):
            assert abs(value - float(expected)) <= 1e-12


def test_stream_matches_oracle_on_random_contexts():
    """Streaming closed form equals the per-attribute definition for several block sizes."""
    for seed in range(40):
        ctx = make_random_context(seed, n=10, m=4)
        for block_size in (1, 3, 10):
            assert list(avf_stream(ctx, block_size, precision="rational").scores) == \
                _stream_oracle(ctx, block_size)


def test_stream_with_initial_probability_matches_oracle():
    """The prior is folded into every probability."""
    ctx = make_random_context(7, n=8, m=3)
    scores = avf_stream(ctx, 2, precision="rational", initial_probability=0.1)
    assert list(scores.scores) == _stream_oracle(ctx, 2, F(1, 10))


def test_stream_times_position_equals_naive():
    """With one record per block, normalized score times position is the naive score."""
    for seed in range(20):
        ctx = make_random_context(seed, n=15, m=6)
        stream = avf_stream(ctx, 1, precision="rational").scores
        naive = avf_naive_stream(ctx, precision="rational").scores
        for i, (s, v) in enumerate(zip(stream, naive), start=1):
            assert s * i == v


def test_single_block_scores_zero_fraction():
    """A block spanning the stream sees no counts: each score is the row's share of zeros."""
    ctx = make_random_context(3, n=9, m=5)
    for block_size in (9, 50):
        scores = avf_stream(ctx, block_size, precision="rational").scores
        assert list(scores) == [F(ctx.m - len(row), ctx.m) for row in ctx.rows]


def test_counts_rescale_halves_with_floor():
    counts = AttributeCounts(3, 5, [5, 3, 0])
    halved = counts_rescale(counts)
    assert halved.n_seen == 2
    assert halved.counts == [2, 1, 0]
    assert counts.counts == [5, 3, 0]


def test_rescaled_stream_keeps_anomalies_on_top():
    """Halving counts does not disturb which rows rank first."""
    positions = [50 + 100 * k for k in range(10)]
    rows = [frozenset({7, 8, 9}) if i in positions else frozenset({0, 1, 2}) for i in range(1000)]
    row_ids = tuple(f"p{i}" for i in range(1000))
    ctx = Context("rescale", tuple(f"a{j}" for j in range(10)), row_ids, tuple(rows))
    truth = GroundTruth(frozenset(row_ids[i] for i in positions))

    plain = rank(avf_stream(ctx, 1, precision="float"), truth)
    rescaled_scores = avf_stream(ctx, 1, precision="float", rescale_threshold=64)
    rescaled = rank(rescaled_scores, truth)

    assert set(plain.row_ids[:10]) == truth.attack_ids
    assert set(rescaled.row_ids[:10]) == truth.attack_ids
    assert rescaled_scores.notes and rescaled_scores.notes[0].startswith("counts rescaled")


def test_streaming_state_is_independent_of_stream_length():
    """Only m counters are kept however many records pass through."""
    short, long = StreamingAVF(20, precision="float"), StreamingAVF(20, precision="float")
    short.score_block([[0, 1]] * 10)
    for _ in range(100):
        long.score_block([[0, 1], [2], [3, 4, 5]] * 10)
    assert len(short.counts.counts) == len(long.counts.counts) == 20
    assert set(vars(short)) == set(vars(long))
    assert long.counts.n_seen == 3000


def test_stream_rejects_bad_block_sizes(running_example):
    ctx, _ = running_example
    for bad in (0, -1, 1.5, True):
        with pytest.raises(ContractViolationError):
            avf_stream(ctx, bad)


def test_scorers_need_attributes():
    ctx = Context("empty", (), ("a", "b"), (frozenset(), frozenset()))
    with pytest.raises(ContractViolationError):
        avf_batch(ctx)
    with pytest.raises(ContractViolationError):
        avf_stream(ctx)


def test_scores_ignore_attribute_order():
    """Permuting columns leaves every score unchanged."""
    ctx = make_random_context(11, n=12, m=5)
    order = [3, 0, 4, 1, 2]
    where = {old: new for new, old in enumerate(order)}
    shuffled = Context("cols", tuple(ctx.attributes[j] for j in order), ctx.row_ids,
                       tuple(frozenset(where[j] for j in row) for row in ctx.rows))
    assert avf_batch(ctx, "rational").scores == avf_batch(shuffled, "rational").scores
    assert avf_stream(ctx, 2, "rational").scores == avf_stream(shuffled, 2, "rational").scores


@pytest.mark.slow
def test_stream_throughput_on_large_context():
    """100,000 x 100 streams in float mode within five seconds."""
    import numpy as np

    rng = np.random.default_rng(0)
    rows = tuple(frozenset(rng.choice(100, size=5, replace=False).tolist()) for _ in range(100_000))
    ctx = Context("large", tuple(f"a{j}" for j in range(100)), tuple(f"r{i}" for i in range(100_000)), rows)
    started = time.perf_counter()
    avf_stream(ctx, 1, precision="float")
    assert time.perf_counter() - started < 5.0
