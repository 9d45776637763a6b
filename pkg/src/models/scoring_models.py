"""
Data models for scores, mined patterns and rankings.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from ..utils.exceptions import InternalInvariantError

Score = Union[float, Fraction]


class Polarity(str, Enum):
    """Whether low or high scores denote anomalies."""
    LOW_IS_ANOMALOUS = "LOW_IS_ANOMALOUS"
    HIGH_IS_ANOMALOUS = "HIGH_IS_ANOMALOUS"

    def inverted(self) -> "Polarity":
        if self is Polarity.LOW_IS_ANOMALOUS:
            return Polarity.HIGH_IS_ANOMALOUS
        return Polarity.LOW_IS_ANOMALOUS


class TiePolicy(str, Enum):
    """How metrics treat rows with equal scores."""
    STABLE = "STABLE"
    AVERAGE_RANK = "AVERAGE_RANK"


@dataclass(frozen=True)
class ScoreVector:
    """One anomaly score per context row, in context order."""

    row_ids: Tuple[str, ...]
    scores: Tuple[Score, ...]
    polarity: Polarity
    algorithm: str = ""
    params: Dict[str, Any] = field(default_factory=dict, compare=False)
    notes: Tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "row_ids", tuple(self.row_ids))
        object.__setattr__(self, "scores", tuple(self.scores))
        object.__setattr__(self, "notes", tuple(self.notes))
        if len(self.row_ids) != len(self.scores):
            raise InternalInvariantError("score vector must hold one score per row",
                                         invariant="one score per row")
        for value in self.scores:
            if not isinstance(value, Fraction) and not math.isfinite(value):
                raise InternalInvariantError(f"non-finite score {value} from {self.algorithm}",
                                             invariant="finite scores")

    def __len__(self) -> int:
        return len(self.scores)


@dataclass(frozen=True)
class Itemset:
    """A set of attribute indices with its exact support count over n rows."""

    items: Tuple[int, ...]
    support: int
    n: int
    # Row bitmask of the supporting rows, when the miner keeps it
    mask: Optional[int] = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(sorted(self.items)))

    @property
    def support_fraction(self) -> Fraction:
        return Fraction(self.support, self.n) if self.n else Fraction(0)

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class Rule:
    """Association rule antecedent -> consequent with exact confidence."""

    antecedent: Tuple[int, ...]
    consequent: Tuple[int, ...]
    support: int
    confidence: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "antecedent", tuple(sorted(self.antecedent)))
        object.__setattr__(self, "consequent", tuple(sorted(self.consequent)))
        if set(self.antecedent) & set(self.consequent):
            raise InternalInvariantError("rule sides must be disjoint", invariant="disjoint rule")


@dataclass(frozen=True)
class Ranking:
    """Rows ordered from most to least anomalous.

    ``scores`` and ``labels`` follow the ranked order; position 1 is
    ``row_ids[0]``.
    """

    row_ids: Tuple[str, ...]
    scores: Tuple[Score, ...]
    labels: Tuple[int, ...]
    polarity: Polarity
    tie_policy: TiePolicy = TiePolicy.STABLE
    unmatched: Tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.row_ids)

    @property
    def attack_count(self) -> int:
        return sum(self.labels)

    def position_of(self, row_id: str) -> int:
        """1-based position of a row."""
        return self.row_ids.index(row_id) + 1

    def with_tie_policy(self, tie_policy: TiePolicy) -> "Ranking":
        return Ranking(self.row_ids, self.scores, self.labels, self.polarity, tie_policy, self.unmatched)

    def tie_groups(self) -> List[Tuple[int, int]]:
        """Half-open position ranges [start, end) of equal-score runs (0-based)."""
        groups: List[Tuple[int, int]] = []
        start = 0
        for i in range(1, len(self.scores) + 1):
            if i == len(self.scores) or self.scores[i] != self.scores[start]:
                groups.append((start, i))
                start = i
        return groups


def ranking_from_positions(labels: Sequence[int], row_ids: Optional[Sequence[str]] = None) -> Ranking:
    """Build a STABLE ranking whose order is given directly (scores are positions)."""
    ids = tuple(row_ids) if row_ids is not None else tuple(f"r{i}" for i in range(len(labels)))
    return Ranking(ids, tuple(float(i) for i in range(1, len(labels) + 1)), tuple(int(x) for x in labels),
                   Polarity.LOW_IS_ANOMALOUS, TiePolicy.STABLE)
