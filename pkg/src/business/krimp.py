"""
Krimp code tables and OC3 compression-based anomaly scoring.

A code table is an ordered list of itemsets (always including every
singleton). A row is covered greedily by the first entries that fit in
what remains of it; its encoded size is the sum of the code lengths of the
entries used. Code lengths come from Laplace-smoothed usages:

    codelen(e) = -log2((usage(e) + eps) / (sum_usage + eps * (|CT| + 1)))

The extra eps slot keeps every code length positive, even in a table with a
single entry.

Each entry in use costs its items under the singleton standard table plus
its own code in the model part, and the data part is sum usage * codelen.

Items live in an item space of m presence items, plus m absent-value items
(index m + j stands for "attribute j is 0") when ``absent_values`` is on.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ..config.config import KrimpConfiguration, get_config
from ..models.context_models import Context
from ..models.scoring_models import Polarity, ScoreVector
from ..utils.deadline import Deadline, ensure_deadline
from ..utils.exceptions import InternalInvariantError
from ..utils.logging import get_logger
from .itemsets import Threshold, mine_closed

logger = get_logger("provad.krimp")


@dataclass(frozen=True)
class KrimpSettings:
    """Encoder knobs shared by OC3 and the CompreX group encoders."""

    epsilon: float = 1.0
    prune: bool = True
    absent_values: bool = False
    min_candidate_support: int = 2
    max_itemsets: Optional[int] = None

    @classmethod
    def from_config(cls, section: Optional[KrimpConfiguration] = None, **overrides) -> "KrimpSettings":
        section = section or get_config().krimp
        values = {
            "epsilon": section.epsilon,
            "prune": section.prune,
            "absent_values": section.absent_values,
            "min_candidate_support": section.min_candidate_support,
            "max_itemsets": get_config().mining.max_itemsets,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def code_length(usage: float, total_usage: float, entries: int, epsilon: float) -> float:
    """Smoothed code length in bits; always finite and positive."""
    return -math.log2((usage + epsilon) / (total_usage + epsilon * (entries + 1)))


def _bits_of(items: Iterable[int]) -> int:
    bits = 0
    for i in items:
        bits |= 1 << i
    return bits


def _items_of(bits: int) -> Tuple[int, ...]:
    items = []
    while bits:
        low = bits & -bits
        items.append(low.bit_length() - 1)
        bits ^= low
    return tuple(items)


@dataclass
class CodeTableEntry:
    items: Tuple[int, ...]
    support: int
    usage: int = 0
    code_length: float = 0.0

    @property
    def bits(self) -> int:
        return _bits_of(self.items)

    @property
    def is_singleton(self) -> bool:
        return len(self.items) == 1


def cover_order_key(items: Tuple[int, ...], support: int) -> Tuple[int, int, Tuple[int, ...]]:
    """Length desc, support desc, then lexicographic items."""
    return (-len(items), -support, items)


@dataclass
class CodeTable:
    """A finished Krimp code table over an item space."""

    item_names: Tuple[str, ...]
    m: int
    absent_values: bool
    epsilon: float
    entries: List[CodeTableEntry]
    standard_lengths: Tuple[float, ...]
    n_rows: int = 0
    trace: List[float] = field(default_factory=list)
    baseline_size: float = 0.0

    def __post_init__(self) -> None:
        self._bits = [e.bits for e in self.entries]
        self.refresh_code_lengths()

    @property
    def n_items(self) -> int:
        return len(self.item_names)

    @property
    def total_usage(self) -> int:
        return sum(e.usage for e in self.entries)

    def refresh_code_lengths(self) -> None:
        total, size = self.total_usage, len(self.entries)
        for entry in self.entries:
            entry.code_length = code_length(entry.usage, total, size, self.epsilon)

    def row_bits(self, row: Iterable[int]) -> int:
        """Item-space bitmask of a context row."""
        bits = _bits_of(row)
        if self.absent_values:
            bits |= (((1 << self.m) - 1) & ~bits) << self.m
        return bits

    def cover_bits(self, bits: int) -> List[CodeTableEntry]:
        remaining = bits
        used = []
        for entry, entry_bits in zip(self.entries, self._bits):
            if not remaining:
                break
            if entry_bits & remaining == entry_bits:
                used.append(entry)
                remaining ^= entry_bits
        if remaining:
            raise InternalInvariantError(f"items {_items_of(remaining)} cannot be covered",
                                         invariant="singleton completeness")
        return used

    def encoded_length(self, bits: int) -> float:
        return sum(entry.code_length for entry in self.cover_bits(bits))

    def model_size(self) -> float:
        return sum(sum(self.standard_lengths[i] for i in e.items) + e.code_length
                   for e in self.entries if e.usage > 0)

    def data_size(self) -> float:
        return sum(e.usage * e.code_length for e in self.entries)

    def total_size(self) -> float:
        return self.model_size() + self.data_size()

    def non_singletons(self) -> List[CodeTableEntry]:
        return [e for e in self.entries if not e.is_singleton]


def cover(t: Iterable[int], ct: CodeTable) -> List[Tuple[int, ...]]:
    """Greedy cover of an item-space row: the entries used, in cover order."""
    return [entry.items for entry in ct.cover_bits(_bits_of(t))]


def item_space_context(ctx: Context, absent_values: bool) -> Context:
    """The context over which code tables are mined (adds absent-value items when asked)."""
    if not absent_values:
        return ctx
    m = ctx.m
    attributes = ctx.attributes + tuple(f"!{name}" for name in ctx.attributes)
    rows = tuple(row | frozenset(m + j for j in range(m) if j not in row) for row in ctx.rows)
    return Context(ctx.name, attributes, ctx.row_ids, rows)


class _KrimpBuilder:
    """Mutable state of one code table search over deduplicated rows."""

    def __init__(self, rows: List[int], weights: List[int], n_items: int, supports: List[int], epsilon: float):
        self.rows = rows
        self.weights = weights
        self.epsilon = epsilon
        total_support = sum(supports)
        self.standard_lengths = tuple(code_length(s, total_support, n_items, epsilon) for s in supports)

        self.order: List[int] = []
        self.support: Dict[int, int] = {}
        self.usage: Dict[int, int] = {}
        self.st_cost: Dict[int, float] = {}
        for i, s in enumerate(supports):
            self._add_entry(1 << i, s)
        self._sort()
        self.covers: List[List[int]] = [self._cover(bits) for bits in rows]
        for covering, weight in zip(self.covers, weights):
            for e in covering:
                self.usage[e] += weight

    def _add_entry(self, bits: int, support: int) -> None:
        self.order.append(bits)
        self.support[bits] = support
        self.usage[bits] = 0
        self.st_cost[bits] = sum(self.standard_lengths[i] for i in _items_of(bits))

    def _sort(self) -> None:
        self.order.sort(key=lambda b: cover_order_key(_items_of(b), self.support[b]))

    def _cover(self, bits: int) -> List[int]:
        remaining = bits
        used = []
        for e in self.order:
            if not remaining:
                break
            if e & remaining == e:
                used.append(e)
                remaining ^= e
        return used

    def total_size(self) -> float:
        total, entries = sum(self.usage.values()), len(self.order)
        size = 0.0
        for e in self.order:
            u = self.usage[e]
            if u:
                code = code_length(u, total, entries, self.epsilon)
                size += self.st_cost[e] + code + u * code
        return size

    def _recover(self, affected: List[int]) -> Dict[int, List[int]]:
        """Re-cover the affected rows; returns their previous covers."""
        previous = {}
        for r in affected:
            old = self.covers[r]
            previous[r] = old
            new = self._cover(self.rows[r])
            weight = self.weights[r]
            for e in old:
                self.usage[e] -= weight
            for e in new:
                self.usage[e] += weight
            self.covers[r] = new
        return previous

    def _restore(self, previous: Dict[int, List[int]]) -> None:
        for r, old in previous.items():
            weight = self.weights[r]
            for e in self.covers[r]:
                self.usage[e] -= weight
            for e in old:
                self.usage[e] += weight
            self.covers[r] = old

    def try_insert(self, bits: int, support: int, current: float) -> Optional[float]:
        """Insert a candidate; keep it and return the new size if the total shrinks."""
        self._add_entry(bits, support)
        self._sort()
        affected = [r for r, row in enumerate(self.rows) if row & bits == bits]
        previous = self._recover(affected)
        size = self.total_size()
        if size < current:
            return size
        self._restore(previous)
        self._remove_entry(bits)
        return None

    def _remove_entry(self, bits: int) -> None:
        self.order.remove(bits)
        del self.support[bits], self.usage[bits], self.st_cost[bits]

    def prune(self, before: Dict[int, int], current: float, deadline: Deadline) -> float:
        """Try removing non-singleton entries whose usage dropped; keep removals that shrink the total."""
        pending = {e for e in self.order if e & (e - 1) and self.usage[e] < before.get(e, self.usage[e])}
        while pending:
            deadline.check()
            e = min(pending, key=lambda b: (self.usage[b], cover_order_key(_items_of(b), self.support[b])))
            pending.discard(e)
            usage_before = dict(self.usage)
            affected = [r for r, covering in enumerate(self.covers) if e in covering]
            self.order.remove(e)
            previous = self._recover(affected)
            # e is out of the order with usage 0, so it no longer counts
            size = self.total_size()
            if size < current:
                del self.support[e], self.usage[e], self.st_cost[e]
                current = size
                pending |= {b for b in self.order
                            if b & (b - 1) and self.usage[b] < usage_before.get(b, self.usage[b])}
            else:
                self.order.append(e)
                self._sort()
                self._restore(previous)
        return current


def krimp_build(ctx: Context, minsupp: Optional[Threshold] = None, settings: Optional[KrimpSettings] = None,
                deadline: Optional[Deadline] = None) -> CodeTable:
    """
    Build a Krimp code table for a context.

    Args:
        ctx: Training data
        minsupp: Candidate support threshold; defaults to the smallest
            possible, 1/n
        settings: Encoder settings (defaults from the krimp configuration)
        deadline: Optional cooperative deadline

    Returns:
        CodeTable with its acceptance trace of total sizes
    """
    ctx.require_attributes("krimp_build")
    settings = settings or KrimpSettings.from_config()
    deadline = ensure_deadline(deadline)
    space = item_space_context(ctx, settings.absent_values)
    n_items = space.m

    supports = space.column_counts()
    multiplicity = Counter(_bits_of(row) for row in space.rows)
    rows = list(multiplicity)
    weights = [multiplicity[bits] for bits in rows]
    builder = _KrimpBuilder(rows, weights, n_items, supports, settings.epsilon)

    current = builder.total_size()
    baseline = current
    trace = [current]
    accepted = 0

    if ctx.n:
        threshold = minsupp if minsupp is not None else Fraction(1, ctx.n)
        candidates = [c for c in mine_closed(space, threshold, settings.max_itemsets, deadline)
                      if len(c.items) >= 2 and c.support >= settings.min_candidate_support]
        # Standard candidate order: support desc, length desc, items
        candidates.sort(key=lambda c: (-c.support, -len(c.items), c.items))
        for candidate in candidates:
            deadline.check()
            before = dict(builder.usage)
            size = builder.try_insert(_bits_of(candidate.items), candidate.support, current)
            if size is None:
                continue
            current = size
            accepted += 1
            if settings.prune:
                current = builder.prune(before, current, deadline)
            trace.append(current)
        logger.debug("Built code table", context=ctx.name, candidates=len(candidates), accepted=accepted,
                     baseline=round(baseline, 3), final=round(current, 3))

    entries = [CodeTableEntry(_items_of(bits), builder.support[bits], builder.usage[bits])
               for bits in builder.order]
    return CodeTable(space.attributes, ctx.m, settings.absent_values, settings.epsilon, entries,
                     builder.standard_lengths, ctx.n, trace, baseline)


def encode_rows(ctx: Context, ct: CodeTable) -> Tuple[List[float], List[int]]:
    """Encoded size of every row; rows with no attribute get 0 and are returned as flagged positions."""
    scores: List[float] = []
    empty: List[int] = []
    for i, row in enumerate(ctx.rows):
        if not row:
            scores.append(0.0)
            empty.append(i)
        else:
            scores.append(ct.encoded_length(ct.row_bits(row)))
    return scores, empty


def empty_row_note(ctx: Context, empty: Sequence[int]) -> Tuple[str, ...]:
    if not empty:
        return ()
    note = f"{len(empty)} empty rows scored 0: {', '.join(ctx.row_ids[i] for i in empty[:10])}"
    if len(empty) > 10:
        note += ", ..."
    logger.warning(note, context=ctx.name)
    return (note,)


def oc3_scores(ctx: Context, minsupp: Optional[Threshold] = None, settings: Optional[KrimpSettings] = None,
               deadline: Optional[Deadline] = None) -> ScoreVector:
    """Encoded size of each row under a code table built on the context itself; high is anomalous."""
    settings = settings or KrimpSettings.from_config()
    ct = krimp_build(ctx, minsupp, settings, deadline)
    scores, empty = encode_rows(ctx, ct)
    params = {
        "minsupp": float(minsupp) if minsupp is not None else None,
        "absent_values": settings.absent_values,
        "code_table_size": len(ct.entries),
    }
    return ScoreVector(ctx.row_ids, scores, Polarity.HIGH_IS_ANOMALOUS, "oc3", params,
                       empty_row_note(ctx, empty))
