"""
Protocols for scorers, harness observers and context storage.

These define the contracts the harness depends on, so scorers and storage
can be swapped (or faked in tests) without touching the controller.
"""

from pathlib import Path
from typing import Any, Dict, Optional, Protocol, Union

from ..models.context_models import Context, GroundTruth
from ..models.plan_models import CellResult
from ..models.scoring_models import ScoreVector
from ..utils.deadline import Deadline


class ScorerProtocol(Protocol):
    """An anomaly scorer over a whole context."""

    def __call__(self, ctx: Context, algorithm: str, params: Dict[str, Any],
                 deadline: Optional[Deadline] = None) -> ScoreVector:
        """Score every row of ``ctx`` with the named algorithm."""
        ...


class CellObserverProtocol(Protocol):
    """Receives every finished harness cell (OK or DNF)."""

    def __call__(self, result: CellResult) -> None:
        ...


class ContextStoreProtocol(Protocol):
    """Loads contexts and ground truth for the harness."""

    def load_context(self, path: Union[str, Path]) -> Context:
        """Load a context file."""
        ...

    def load_ground_truth(self, path: Union[str, Path]) -> GroundTruth:
        """Load a ground-truth file."""
        ...
