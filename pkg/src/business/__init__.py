"""
Business logic package.

Context construction, the anomaly scorers, pattern mining and ranking
metrics. ``scoring_service`` is the single entry point used by the CLI and
the harness.
"""

from .scoring_service import ALGORITHMS, algorithm_names, score_context

__all__ = ['ALGORITHMS', 'algorithm_names', 'score_context']
