"""
Interfaces package.

Protocols for the contracts between the harness and the components it
drives, keeping scorers and storage swappable.
"""

from .scorer_protocols import CellObserverProtocol, ContextStoreProtocol, ScorerProtocol

__all__ = ['CellObserverProtocol', 'ContextStoreProtocol', 'ScorerProtocol']
