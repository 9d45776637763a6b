"""
Data models for provenance events and Boolean behavioural contexts.

An ``EventRecord`` is one normalized audit event. A ``Context`` is a sparse
Boolean matrix of processes (rows) against attributes (columns); rows are
kept as frozensets of attribute indices holding a 1.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..utils.exceptions import ConfigurationError, ContractViolationError, InternalInvariantError


class ContextKind(str, Enum):
    """The behavioural aspects a context can summarize."""
    PE = "PE"  # process vs event types
    PX = "PX"  # process vs own executable names
    PP = "PP"  # process vs parent executable names
    PN = "PN"  # process vs remote IPs and ports
    PA = "PA"  # join of the above
    CUSTOM = "custom"

    @classmethod
    def parse(cls, value: Union[str, "ContextKind"]) -> "ContextKind":
        if isinstance(value, cls):
            return value
        lookup = {kind.value.lower(): kind for kind in cls}
        kind = lookup.get(str(value).strip().lower())
        if kind is None:
            raise ConfigurationError(f"Unknown context kind '{value}'",
                                     setting_name="kind", setting_value=value)
        return kind


class EventRecord(BaseModel):
    """One audit event, parsed from a JSON-lines record."""

    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="ignore")

    process_id: str = Field(alias="pid", min_length=1)
    event_type: Optional[str] = Field(default=None, alias="event")
    exec_name: Optional[str] = Field(default=None, alias="exec")
    parent_exec_name: Optional[str] = Field(default=None, alias="parent_exec")
    remote_ip: Optional[str] = Field(default=None, alias="ip")
    remote_port: Optional[int] = Field(default=None, alias="port", ge=0, le=65535)

    @field_validator("process_id", mode="before")
    @classmethod
    def _pid_as_text(cls, value):
        if isinstance(value, int) and not isinstance(value, bool):
            return str(value)
        return value

    @field_validator("event_type", "exec_name", "parent_exec_name", "remote_ip", mode="before")
    @classmethod
    def _blank_is_missing(cls, value):
        if isinstance(value, str) and not value.strip():
            return None
        return value


@dataclass(frozen=True)
class Context:
    """A named sparse Boolean matrix: n rows by m attributes.

    The name is metadata and does not take part in equality.
    """

    name: str = field(compare=False)
    attributes: Tuple[str, ...]
    row_ids: Tuple[str, ...]
    rows: Tuple[FrozenSet[int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "row_ids", tuple(self.row_ids))
        object.__setattr__(self, "rows", tuple(frozenset(r) for r in self.rows))

        if len(set(self.attributes)) != len(self.attributes):
            raise InternalInvariantError(f"duplicate attribute names in context {self.name}",
                                         invariant="unique attributes")
        if len(set(self.row_ids)) != len(self.row_ids):
            raise InternalInvariantError(f"duplicate row ids in context {self.name}",
                                         invariant="unique row ids")
        if len(self.rows) != len(self.row_ids):
            raise InternalInvariantError("row ids and rows differ in length",
                                         invariant="one id per row")
        m = len(self.attributes)
        for row in self.rows:
            if row and (max(row) >= m or min(row) < 0):
                raise InternalInvariantError(f"attribute index out of range in context {self.name}",
                                             invariant="index < m")

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def m(self) -> int:
        return len(self.attributes)

    def require_attributes(self, operation: str) -> None:
        """Scorers need at least one attribute."""
        if self.m == 0:
            raise ContractViolationError(f"{operation} requires a context with at least one attribute",
                                         operation=operation, parameter="m", value=0)

    def column_counts(self) -> List[int]:
        counts = [0] * self.m
        for row in self.rows:
            for j in row:
                counts[j] += 1
        return counts

    def to_dense(self, dtype=np.uint8) -> np.ndarray:
        dense = np.zeros((self.n, self.m), dtype=dtype)
        for i, row in enumerate(self.rows):
            if row:
                dense[i, list(row)] = 1
        return dense

    def attribute_masks(self) -> List[int]:
        """Per attribute, an int bitmask of the rows holding a 1 (vertical layout)."""
        masks = [0] * self.m
        for i, row in enumerate(self.rows):
            bit = 1 << i
            for j in row:
                masks[j] |= bit
        return masks

    def permuted(self, order: Sequence[int], name: Optional[str] = None) -> "Context":
        """Reorder rows; attributes are never permuted."""
        order = [int(i) for i in order]
        if sorted(order) != list(range(self.n)):
            raise ContractViolationError("row order must be a permutation of 0..n-1",
                                         operation="permuted", parameter="order")
        return Context(name or self.name, self.attributes,
                       tuple(self.row_ids[i] for i in order),
                       tuple(self.rows[i] for i in order))

    def project(self, columns: Sequence[int], name: Optional[str] = None) -> "Context":
        """Keep only the given columns, re-indexed in the given order."""
        remap = {old: new for new, old in enumerate(columns)}
        rows = tuple(frozenset(remap[j] for j in row if j in remap) for row in self.rows)
        return Context(name or self.name, tuple(self.attributes[j] for j in columns), self.row_ids, rows)

    @classmethod
    def from_dense(cls, name: str, attributes: Sequence[str], row_ids: Sequence[str],
                   matrix: Iterable[Iterable[int]]) -> "Context":
        rows = tuple(frozenset(j for j, bit in enumerate(r) if bit) for r in matrix)
        return cls(name, tuple(attributes), tuple(row_ids), rows)

    @classmethod
    def empty(cls, name: str) -> "Context":
        return cls(name, (), (), ())


@dataclass(frozen=True)
class GroundTruth:
    """Row ids of processes annotated as part of an attack."""

    attack_ids: FrozenSet[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "attack_ids", frozenset(self.attack_ids))

    def __len__(self) -> int:
        return len(self.attack_ids)

    def __contains__(self, row_id: object) -> bool:
        return row_id in self.attack_ids

    def unmatched(self, row_ids: Iterable[str]) -> List[str]:
        """Attack ids that do not occur among ``row_ids``, sorted."""
        present = set(row_ids)
        return sorted(a for a in self.attack_ids if a not in present)

    def labels(self, row_ids: Sequence[str]) -> List[int]:
        return [1 if r in self.attack_ids else 0 for r in row_ids]


@dataclass(frozen=True)
class ContextSummary:
    """Shape and density of a context."""

    name: str
    n: int
    m: int
    ones: int
    empty_rows: int
    column_counts: Tuple[int, ...]

    @property
    def density(self) -> float:
        cells = self.n * self.m
        return self.ones / cells if cells else 0.0
