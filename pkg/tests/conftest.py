"""
Shared fixtures for the provenance anomaly toolkit tests.
"""

import os
import random
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.config.config import ConfigurationManager, set_config_manager  # noqa: E402
from src.models.context_models import Context, GroundTruth  # noqa: E402


@pytest.fixture(autouse=True)
def default_config():
    """Every test runs against built-in defaults, untouched by the caller's environment."""
    manager = ConfigurationManager(environ={})
    set_config_manager(manager)
    yield manager
    set_config_manager(None)


@pytest.fixture
def running_example():
    """Four processes over three remote hosts; P1337 alone talks to evil.com."""
    ctx = Context(
        "PN",
        ("abc.com", "xyz.com", "evil.com"),
        ("P17", "P42", "P1337", "P007"),
        (frozenset({0, 1}), frozenset({0, 1}), frozenset({2}), frozenset({0, 1, 2})),
    )
    return ctx, GroundTruth(frozenset({"P1337"}))


def make_random_context(seed: int, n: int = 12, m: int = 5, density: float = 0.4) -> Context:
    rng = random.Random(seed)
    rows = [frozenset(j for j in range(m) if rng.random() < density) for _ in range(n)]
    return Context(f"random{seed}", tuple(f"a{j}" for j in range(m)),
                   tuple(f"r{i}" for i in range(n)), tuple(rows))


@pytest.fixture
def random_context():
    """Factory for small seeded random contexts."""
    return make_random_context
