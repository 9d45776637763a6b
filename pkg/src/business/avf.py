"""
Attribute Value Frequency (AVF) scoring: batch, naive streaming and
normalized (block) streaming.

Rows are sparse, so every score is computed from the per-attribute counts
of the row's own items plus the total count S = sum(c_j):

    sum_j [x_j*c_j + (1-x_j)*(N-c_j)] = m*N - S + 2*sum_{j in x} c_j - N*|x|

Numerators stay exact integers (or Fractions when an initial probability is
set); ``precision`` only decides how the final division is done.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Union

from ..config.config import VALID_PRECISIONS, get_config
from ..models.context_models import Context
from ..models.scoring_models import Polarity, Score, ScoreVector
from ..utils.deadline import Deadline, ensure_deadline
from ..utils.exceptions import ConfigurationError, ContractViolationError
from ..utils.logging import get_logger

logger = get_logger("provad.avf")

Number = Union[int, Fraction, float]


@dataclass
class AttributeCounts:
    """Occurrence counts of value 1 per attribute over the records seen so far."""

    m: int
    n_seen: int = 0
    counts: List[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.counts:
            self.counts = [0] * self.m
        if len(self.counts) != self.m:
            raise ContractViolationError("counts must hold exactly m counters",
                                         operation="AttributeCounts", parameter="counts")

    @property
    def total(self) -> int:
        return sum(self.counts)

    def update(self, row: Iterable[int]) -> None:
        for j in row:
            self.counts[j] += 1
        self.n_seen += 1


def counts_rescale(counts: AttributeCounts) -> AttributeCounts:
    """Halve every count and the record total (integer floor)."""
    return AttributeCounts(counts.m, counts.n_seen // 2, [c // 2 for c in counts.counts])


def resolve_precision(precision: Optional[str]) -> bool:
    """True for rational arithmetic."""
    precision = precision or get_config().avf.precision
    if precision not in VALID_PRECISIONS:
        raise ConfigurationError(f"Unknown precision '{precision}'", setting_name="precision",
                                 setting_value=precision)
    return precision == "rational"


def _divide(numerator: Number, denominator: int, rational: bool) -> Score:
    if rational:
        return Fraction(numerator) / denominator
    return float(numerator) / denominator


def avf_batch(ctx: Context, precision: Optional[str] = None,
              deadline: Optional[Deadline] = None) -> ScoreVector:
    """Score every row against counts over the whole context; low is anomalous."""
    ctx.require_attributes("avf_batch")
    rational = resolve_precision(precision)
    deadline = ensure_deadline(deadline)

    counts = ctx.column_counts()
    n, m = ctx.n, ctx.m
    base = m * n - sum(counts)
    scores = []
    for row in ctx.rows:
        deadline.check()
        numerator = base + 2 * sum(counts[j] for j in row) - n * len(row)
        scores.append(_divide(numerator, m, rational))

    return ScoreVector(ctx.row_ids, scores, Polarity.LOW_IS_ANOMALOUS, "avf",
                       {"precision": "rational" if rational else "float"})


def avf_naive_stream(ctx: Context, precision: Optional[str] = None,
                     deadline: Optional[Deadline] = None) -> ScoreVector:
    """Unnormalized streaming AVF: record i sees counts of the first i-1 records.

    Scores grow with the stream position, biasing rankings toward early
    records.
    """
    ctx.require_attributes("avf_naive_stream")
    rational = resolve_precision(precision)
    deadline = ensure_deadline(deadline)

    m = ctx.m
    counts = AttributeCounts(m)
    total = 0
    scores = []
    for i, row in enumerate(ctx.rows, start=1):
        deadline.check()
        numerator = m * i - total + 2 * sum(counts.counts[j] for j in row) - i * len(row)
        scores.append(_divide(numerator, m, rational))
        counts.update(row)
        total += len(row)

    return ScoreVector(ctx.row_ids, scores, Polarity.LOW_IS_ANOMALOUS, "avf-naive",
                       {"precision": "rational" if rational else "float"})


class StreamingAVF:
    """
    Incremental normalized AVF over a stream of sparse records.

    Only the m counters and the record total are kept. Each call to
    ``score_block`` scores its records against probabilities frozen at the
    start of the block, q_j = (c_j + p0) / d, where d is the number of
    records seen plus the record's offset in the block plus one; the counts
    are updated with the whole block afterwards.
    """

    def __init__(self, m: int, initial_probability: Optional[float] = None,
                 rescale_threshold: Optional[int] = None, precision: Optional[str] = None):
        if m < 1:
            raise ContractViolationError("streaming AVF needs at least one attribute",
                                         operation="StreamingAVF", parameter="m", value=m)
        avf_config = get_config().avf
        p0 = avf_config.initial_probability if initial_probability is None else initial_probability
        if not 0 <= p0 <= 1:
            raise ConfigurationError("initial_probability must lie in [0, 1]",
                                     setting_name="initial_probability", setting_value=p0)
        self.rational = resolve_precision(precision)
        # Fraction(str(.)) keeps decimal knobs like 0.1 exact
        self.initial_probability: Number = 0
        if p0:
            self.initial_probability = Fraction(str(p0)) if self.rational else float(p0)
        self.rescale_threshold = (avf_config.rescale_threshold
                                  if rescale_threshold is None else rescale_threshold)
        self.counts = AttributeCounts(m)
        self.rescales = 0
        self._total = 0

    @property
    def m(self) -> int:
        return self.counts.m

    def score_block(self, rows: Sequence[Iterable[int]]) -> List[Score]:
        """Score a block of records, then absorb it into the counts."""
        rows = [tuple(row) for row in rows]
        m = self.m
        c = self.counts.counts
        p0 = self.initial_probability
        # Totals with the prior folded in: sum_j (c_j + p0)
        prior_total = self._total + m * p0
        scores: List[Score] = []
        for offset, row in enumerate(rows):
            d = self.counts.n_seen + offset + 1
            hits = sum(c[j] for j in row) + len(row) * p0
            numerator = 2 * hits + (m - len(row)) * d - prior_total
            scores.append(_divide(numerator, m * d, self.rational))
        for row in rows:
            self.counts.update(row)
            self._total += len(row)
        self._maybe_rescale()
        return scores

    def _maybe_rescale(self) -> None:
        if self.rescale_threshold is not None and self.counts.n_seen >= self.rescale_threshold:
            self.counts = counts_rescale(self.counts)
            self._total = self.counts.total
            self.rescales += 1
            logger.debug("Rescaled streaming counts", n_seen=self.counts.n_seen, rescales=self.rescales)


def avf_stream(ctx: Context, block_size: int = 1, precision: Optional[str] = None,
               initial_probability: Optional[float] = None, rescale_threshold: Optional[int] = None,
               deadline: Optional[Deadline] = None) -> ScoreVector:
    """Normalized streaming AVF over the context rows in order, in blocks of ``block_size``."""
    if isinstance(block_size, bool) or not isinstance(block_size, int) or block_size < 1:
        raise ContractViolationError("block_size must be a positive integer", operation="avf_stream",
                                     parameter="block_size", value=block_size)
    ctx.require_attributes("avf_stream")
    deadline = ensure_deadline(deadline)
    stream = StreamingAVF(ctx.m, initial_probability, rescale_threshold, precision)

    scores: List[Score] = []
    for start in range(0, ctx.n, block_size):
        deadline.check()
        scores.extend(stream.score_block(ctx.rows[start:start + block_size]))

    params = {
        "block_size": block_size,
        "precision": "rational" if stream.rational else "float",
        "initial_probability": float(stream.initial_probability),
    }
    if stream.rescale_threshold is not None:
        params["rescale_threshold"] = stream.rescale_threshold
    notes = (f"counts rescaled {stream.rescales} times",) if stream.rescales else ()
    return ScoreVector(ctx.row_ids, scores, Polarity.LOW_IS_ANOMALOUS, "avf-stream", params, notes)
