"""
Controllers package.

The harness controller drives experiment plans: it loads contexts, runs
scoring cells on a worker pool and reports results to observers.
"""

from .harness_controller import HarnessController

__all__ = ['HarnessController']
