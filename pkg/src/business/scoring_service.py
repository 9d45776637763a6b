"""
Scoring service: one entry point for every anomaly scorer.

Maps algorithm names to scorer functions, validates and defaults their
parameters, and keeps polarity with every result so later steps never need
the algorithm name.
"""

from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

from ..config.config import get_config
from ..models.context_models import Context
from ..models.scoring_models import Polarity, ScoreVector
from ..utils.deadline import Deadline
from ..utils.exceptions import ContractViolationError
from ..utils.logging import get_logger, performance_timer
from .avf import avf_batch, avf_naive_stream, avf_stream
from .comprex import comprex_scores
from .fpof import fpof_scores
from .krimp import KrimpSettings, oc3_scores
from .outlier_degree import od_scores

logger = get_logger("provad.scoring")


@dataclass(frozen=True)
class AlgorithmSpec:
    """A registered scorer and the parameters it accepts."""

    name: str
    polarity: Polarity
    scorer: Callable[..., ScoreVector]
    required: Tuple[str, ...] = ()
    optional: Tuple[str, ...] = ()

    @property
    def accepted(self) -> Tuple[str, ...]:
        return self.required + self.optional


def _run_avf(ctx: Context, params: Dict[str, Any], deadline: Optional[Deadline]) -> ScoreVector:
    return avf_batch(ctx, params.get("precision"), deadline)


def _run_avf_naive(ctx: Context, params: Dict[str, Any], deadline: Optional[Deadline]) -> ScoreVector:
    return avf_naive_stream(ctx, params.get("precision"), deadline)


def _run_avf_stream(ctx: Context, params: Dict[str, Any], deadline: Optional[Deadline]) -> ScoreVector:
    return avf_stream(ctx, int(params.get("block_size", 1)), params.get("precision"),
                      params.get("initial_probability"), params.get("rescale_threshold"), deadline)


def _run_fpof(ctx: Context, params: Dict[str, Any], deadline: Optional[Deadline]) -> ScoreVector:
    return fpof_scores(ctx, params["minsupp"], params.get("precision"), params.get("max_itemsets"), deadline)


def _run_od(ctx: Context, params: Dict[str, Any], deadline: Optional[Deadline]) -> ScoreVector:
    return od_scores(ctx, params["minsupp"], params["minconf"], params.get("precision"),
                     params.get("max_itemsets"), deadline)


def _run_oc3(ctx: Context, params: Dict[str, Any], deadline: Optional[Deadline]) -> ScoreVector:
    settings = KrimpSettings.from_config(absent_values=params.get("absent_values"),
                                         max_itemsets=params.get("max_itemsets"))
    return oc3_scores(ctx, params.get("minsupp"), settings, deadline)


def _run_comprex(ctx: Context, params: Dict[str, Any], deadline: Optional[Deadline]) -> ScoreVector:
    budget = params.get("budget")
    return comprex_scores(ctx, None if budget is None else int(budget), params.get("absent_values"),
                          deadline=deadline)


ALGORITHMS: Dict[str, AlgorithmSpec] = {
    spec.name: spec for spec in (
        AlgorithmSpec("avf", Polarity.LOW_IS_ANOMALOUS, _run_avf, optional=("precision",)),
        AlgorithmSpec("avf-naive", Polarity.LOW_IS_ANOMALOUS, _run_avf_naive, optional=("precision",)),
        AlgorithmSpec("avf-stream", Polarity.LOW_IS_ANOMALOUS, _run_avf_stream,
                      optional=("block_size", "precision", "initial_probability", "rescale_threshold")),
        AlgorithmSpec("fpof", Polarity.LOW_IS_ANOMALOUS, _run_fpof,
                      optional=("minsupp", "precision", "max_itemsets")),
        AlgorithmSpec("od", Polarity.HIGH_IS_ANOMALOUS, _run_od, required=("minconf",),
                      optional=("minsupp", "precision", "max_itemsets")),
        AlgorithmSpec("oc3", Polarity.HIGH_IS_ANOMALOUS, _run_oc3,
                      optional=("minsupp", "absent_values", "max_itemsets")),
        AlgorithmSpec("comprex", Polarity.HIGH_IS_ANOMALOUS, _run_comprex,
                      optional=("budget", "absent_values")),
    )
}


def algorithm_names() -> List[str]:
    return list(ALGORITHMS)


def get_algorithm(name: str) -> AlgorithmSpec:
    spec = ALGORITHMS.get(name)
    if spec is None:
        raise ContractViolationError(f"Unknown algorithm '{name}'; choose one of {', '.join(ALGORITHMS)}",
                                     operation="score", parameter="algorithm", value=name)
    return spec


def resolve_params(name: str, params: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Check parameter names, require the mandatory ones and fill mining defaults."""
    spec = get_algorithm(name)
    resolved = {k: v for k, v in (params or {}).items() if v is not None}
    unknown = sorted(set(resolved) - set(spec.accepted))
    if unknown:
        raise ContractViolationError(f"{name} does not accept parameter(s) {', '.join(unknown)}",
                                     operation=name, parameter=unknown[0])
    missing = [p for p in spec.required if p not in resolved]
    if missing:
        raise ContractViolationError(f"{name} requires --{missing[0]}", operation=name, parameter=missing[0])
    if name in ("fpof", "od") and "minsupp" not in resolved:
        resolved["minsupp"] = get_config().mining.default_minsupp
    return resolved


def score_context(ctx: Context, algorithm: str, params: Optional[Dict[str, Any]] = None,
                  deadline: Optional[Deadline] = None) -> ScoreVector:
    """
    Score a context with a named algorithm.

    Args:
        ctx: Context to score
        algorithm: One of the registered algorithm names
        params: Algorithm parameters (validated against the registry)
        deadline: Optional cooperative deadline

    Returns:
        ScoreVector tagged with the algorithm, its polarity and parameters
    """
    spec = get_algorithm(algorithm)
    resolved = resolve_params(algorithm, params)
    with performance_timer(f"score {algorithm} on {ctx.name}", logger) as timer:
        result = spec.scorer(ctx, resolved, deadline)
    logger.info(f"Scored {ctx.name} with {algorithm}", n=ctx.n, m=ctx.m, ms=round(timer.elapsed_ms, 1))
    merged = dict(resolved)
    merged.update(result.params)
    return ScoreVector(result.row_ids, result.scores, spec.polarity, algorithm, merged, result.notes)
