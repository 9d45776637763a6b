"""
Experiment plan and report models.

Plans are declarative JSON files validated with pydantic; report rows are
pydantic models so they serialize to JSON-lines and CSV alike.
"""

import json
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

AlgorithmName = Literal["avf", "avf-naive", "avf-stream", "fpof", "od", "oc3", "comprex"]
AnomalyStyle = Literal["rare-singleton", "rare-combination", "missing-expected"]


class SyntheticSpec(BaseModel):
    """Parameters of a planted-anomaly synthetic context."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(ge=1)
    m: int = Field(ge=1)
    patterns: int = Field(default=5, ge=1)
    pattern_length: Tuple[int, int] = (2, 5)
    support_range: Tuple[float, float] = (0.05, 0.5)
    anomalies: Optional[int] = Field(default=None, ge=0)
    anomaly_style: AnomalyStyle = "rare-combination"
    # rare-singleton only: attributes kept out of the background (default one per anomaly)
    reserved_attributes: Optional[int] = Field(default=None, ge=1)
    disjoint_patterns: bool = False
    noise: float = Field(default=0.0, ge=0.0, le=1.0)

    @field_validator("pattern_length")
    @classmethod
    def _valid_length(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        low, high = value
        if low < 1 or high < low:
            raise ValueError("pattern_length must satisfy 1 <= low <= high")
        return value

    @field_validator("support_range")
    @classmethod
    def _valid_support(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        low, high = value
        if not 0 < low <= high <= 1:
            raise ValueError("support_range must satisfy 0 < low <= high <= 1")
        return value

    @property
    def anomaly_count(self) -> int:
        """Planted anomalies; 0.1% of the rows (at least one) unless given."""
        if self.anomalies is not None:
            return self.anomalies
        return max(1, round(0.001 * self.n))

    @property
    def reserved_count(self) -> int:
        if self.anomaly_style != "rare-singleton" or self.anomaly_count == 0:
            return 0
        return min(self.reserved_attributes or self.anomaly_count, self.anomaly_count)


class ContextSource(BaseModel):
    """A context in a plan: a CSV file with its truth file, or a synthetic spec."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(min_length=1)
    path: Optional[str] = None
    truth: Optional[str] = None
    synthetic: Optional[SyntheticSpec] = None
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _one_source(self) -> "ContextSource":
        if (self.path is None) == (self.synthetic is None):
            raise ValueError(f"context '{self.name}' needs exactly one of 'path' or 'synthetic'")
        if self.path is not None and self.truth is None:
            raise ValueError(f"context '{self.name}' needs a 'truth' file next to its 'path'")
        return self


class AlgorithmGrid(BaseModel):
    """An algorithm with the parameter values to sweep (cartesian product)."""

    model_config = ConfigDict(extra="forbid")

    algorithm: AlgorithmName
    grid: Dict[str, List[Any]] = Field(default_factory=dict)

    def cells(self) -> List[Dict[str, Any]]:
        combos: List[Dict[str, Any]] = [{}]
        for key in sorted(self.grid):
            combos = [dict(c, **{key: value}) for c in combos for value in self.grid[key]]
        return combos


class ExperimentPlan(BaseModel):
    """Declarative description of a benchmark run.

    Unset knobs fall back to the harness configuration section.
    """

    model_config = ConfigDict(extra="forbid")

    contexts: List[ContextSource] = Field(min_length=1)
    algorithms: List[AlgorithmGrid] = Field(default_factory=list)
    shuffles: Optional[int] = Field(default=None, ge=1)
    block_fractions: Optional[List[float]] = None
    stream: bool = False
    seed: Optional[int] = None
    timeout_s: Optional[float] = Field(default=None, gt=0)
    jobs: Optional[int] = Field(default=None, ge=1)
    output_dir: str = "results"
    precision: Literal["float", "rational"] = "float"
    write_curves: bool = False

    @field_validator("block_fractions")
    @classmethod
    def _valid_fractions(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and (not value or any(not 0 < b <= 1 for b in value)):
            raise ValueError("block_fractions must be fractions in (0, 1]")
        return value

    @model_validator(mode="after")
    def _unique_names(self) -> "ExperimentPlan":
        names = [c.name for c in self.contexts]
        if len(set(names)) != len(names):
            raise ValueError("context names must be unique")
        if not self.algorithms and not self.stream:
            raise ValueError("plan has neither algorithms nor a stream suite")
        return self


class CellStatus(str, Enum):
    OK = "OK"
    DNF = "DNF"
    ERROR = "ERROR"


def canonical_params(params: Dict[str, Any]) -> str:
    """Stable text form of a parameter dict, used in reports and cell keys."""
    return json.dumps(params, sort_keys=True, separators=(",", ":"))


class CellResult(BaseModel):
    """One row of a metric report."""

    context: str
    algorithm: str
    params: str = "{}"
    ndcg: Optional[float] = None
    auc: Optional[float] = None
    n: int = 0
    m: int = 0
    attacks: int = 0
    block_size: Optional[int] = None
    shuffles: Optional[int] = None
    median_based: bool = False
    wall_ms: float = 0.0
    status: CellStatus = CellStatus.OK
    reason: str = ""
    unmatched: int = 0

    @property
    def key(self) -> str:
        return f"{self.context}|{self.algorithm}|{self.params}|{self.block_size}"


REPORT_COLUMNS = list(CellResult.model_fields)


class StreamAttackRanks(BaseModel):
    """Per-attack median ranks for one (context, block size) stream cell."""

    context: str
    block_size: int
    shuffles: int
    median_ranks: Dict[str, int]
