"""
Context extraction from provenance event streams.

A process has an attribute in a context if it ever exhibits the
corresponding value; event counts are disregarded.
"""

from typing import Callable, Dict, Iterable, List, Optional, Sequence, Union

from ..config.config import get_config
from ..models.context_models import Context, ContextKind, ContextSummary, EventRecord
from ..utils.exceptions import ConfigurationError, InternalInvariantError
from ..utils.logging import get_logger

logger = get_logger("provad.extract")

EXTRACTABLE_KINDS = (ContextKind.PE, ContextKind.PX, ContextKind.PP, ContextKind.PN)
PORT_PREFIX = "port:"


def _event_values(event: EventRecord) -> List[str]:
    return [event.event_type] if event.event_type else []


def _exec_values(event: EventRecord) -> List[str]:
    return [event.exec_name] if event.exec_name else []


def _parent_values(event: EventRecord) -> List[str]:
    return [event.parent_exec_name] if event.parent_exec_name else []


def _netflow_values(event: EventRecord) -> List[str]:
    # IPs and ports are independent columns; ports carry a prefix so they never merge with an IP value
    values = []
    if event.remote_ip:
        values.append(event.remote_ip)
    if event.remote_port is not None:
        values.append(f"{PORT_PREFIX}{event.remote_port}")
    return values


_ATTRIBUTE_EXTRACTORS: Dict[ContextKind, Callable[[EventRecord], List[str]]] = {
    ContextKind.PE: _event_values,
    ContextKind.PX: _exec_values,
    ContextKind.PP: _parent_values,
    ContextKind.PN: _netflow_values,
}


def extract_context(events: Iterable[EventRecord], kind: Union[ContextKind, str],
                    keep_empty_rows: Optional[bool] = None) -> Context:
    """
    Build one Boolean context from an event stream.

    Args:
        events: Normalized events, in stream order
        kind: PE, PX, PP or PN
        keep_empty_rows: Keep processes that never exhibit an attribute of this
            kind (defaults to the dataset configuration)

    Returns:
        Context with rows in first-appearance order and attributes in
        first-observation order
    """
    kind = ContextKind.parse(kind)
    extractor = _ATTRIBUTE_EXTRACTORS.get(kind)
    if extractor is None:
        raise ConfigurationError(f"Context kind {kind.value} cannot be extracted from events",
                                 setting_name="kind", setting_value=kind.value)
    if keep_empty_rows is None:
        keep_empty_rows = get_config().dataset.keep_empty_rows

    attribute_index: Dict[str, int] = {}
    row_bits: Dict[str, set] = {}
    for event in events:
        bits = row_bits.setdefault(event.process_id, set())
        for value in extractor(event):
            j = attribute_index.setdefault(value, len(attribute_index))
            bits.add(j)

    row_ids = [pid for pid, bits in row_bits.items() if keep_empty_rows or bits]
    rows = [frozenset(row_bits[pid]) for pid in row_ids]
    context = Context(kind.value, tuple(attribute_index), tuple(row_ids), tuple(rows))

    logger.debug(f"Extracted {kind.value} context", n=context.n, m=context.m)
    return context


def join_contexts(parts: Sequence[Context], name: str = ContextKind.PA.value) -> Context:
    """
    Join contexts column-wise over the union of their rows.

    Attributes are prefixed with their source context name (``PE:EVENT_READ``);
    a row absent from a part is all-zero over that part's columns.
    """
    if not parts:
        raise InternalInvariantError("join_contexts needs at least one part", invariant="parts non-empty")

    attributes: List[str] = []
    row_order: Dict[str, int] = {}
    offsets: List[int] = []
    for part in parts:
        offsets.append(len(attributes))
        attributes.extend(f"{part.name}:{attr}" for attr in part.attributes)
        for row_id in part.row_ids:
            row_order.setdefault(row_id, len(row_order))

    if len(set(attributes)) != len(attributes):
        raise InternalInvariantError("joined attribute names collide", invariant="unique prefixed attributes")

    joined: List[set] = [set() for _ in row_order]
    for part, offset in zip(parts, offsets):
        for row_id, row in zip(part.row_ids, part.rows):
            joined[row_order[row_id]].update(offset + j for j in row)

    return Context(name, tuple(attributes), tuple(row_order), tuple(frozenset(r) for r in joined))


def extract_all(events: Sequence[EventRecord], keep_empty_rows: Optional[bool] = None) -> Dict[str, Context]:
    """The four primary contexts plus their join, keyed by name."""
    contexts: Dict[str, Context] = {}
    for kind in EXTRACTABLE_KINDS:
        contexts[kind.value] = extract_context(events, kind, keep_empty_rows)
    contexts[ContextKind.PA.value] = join_contexts(list(contexts.values()))
    return contexts


def summarize_context(ctx: Context) -> ContextSummary:
    """Shape, density and per-attribute counts of a context."""
    counts = ctx.column_counts()
    return ContextSummary(
        name=ctx.name,
        n=ctx.n,
        m=ctx.m,
        ones=sum(counts),
        empty_rows=sum(1 for row in ctx.rows if not row),
        column_counts=tuple(counts),
    )
