"""
Tests for the scorer registry.
"""

import pytest

from src.business.scoring_service import ALGORITHMS, algorithm_names, resolve_params, score_context
from src.models.scoring_models import Polarity
from src.utils.exceptions import ContractViolationError


def test_every_algorithm_scores_the_running_example(running_example):
    ctx, _ = running_example
    params = {"od": {"minconf": 0.9}, "fpof": {"minsupp": 0.5}}
    for name in algorithm_names():
        scores = score_context(ctx, name, params.get(name, {}))
        assert scores.algorithm == name
        assert scores.row_ids == ctx.row_ids
        assert scores.polarity is ALGORITHMS[name].polarity


def test_polarities():
    low = {name for name, spec in ALGORITHMS.items() if spec.polarity is Polarity.LOW_IS_ANOMALOUS}
    assert low == {"avf", "avf-naive", "avf-stream", "fpof"}


def test_parameter_validation():
    with pytest.raises(ContractViolationError):
        resolve_params("lof")
    with pytest.raises(ContractViolationError):
        resolve_params("avf", {"minsupp": 0.1})
    with pytest.raises(ContractViolationError) as excinfo:
        resolve_params("od", {"minsupp": 0.1})
    assert excinfo.value.parameter == "minconf"


def test_mining_defaults_come_from_configuration():
    assert resolve_params("fpof") == {"minsupp": 0.1}
    assert resolve_params("od", {"minconf": 0.8, "precision": None}) == {"minconf": 0.8, "minsupp": 0.1}


def test_score_params_record_resolved_values(running_example):
    ctx, _ = running_example
    scores = score_context(ctx, "avf-stream", {"block_size": 2, "precision": "rational"})
    assert scores.params["block_size"] == 2
    assert scores.params["precision"] == "rational"
