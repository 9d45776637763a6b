"""
Experiment harness controller.

Runs parameter sweeps over contexts (batch suite), shuffled streaming runs
aggregated by median attack rank (stream suite) and AVF timing series.
Cells are independent jobs; a failure or timeout in one cell is recorded
as a DNF/ERROR row and never aborts the suite.
"""

import dataclasses
import json
import math
import re
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..business.avf import avf_stream
from ..business.metrics import band_positions, rank, ranking_metrics, tp_curve
from ..business.scoring_service import get_algorithm, score_context
from ..config.config import get_config
from ..interfaces.scorer_protocols import CellObserverProtocol, ContextStoreProtocol, ScorerProtocol
from ..models.context_models import Context, GroundTruth
from ..models.plan_models import (
    CellResult, CellStatus, ExperimentPlan, StreamAttackRanks, SyntheticSpec, canonical_params,
)
from ..models.scoring_models import Polarity, ScoreVector
from ..services.storage import FileContextStore, ReportWriter, write_bands, write_curve, write_dump
from ..utils.deadline import Deadline
from ..utils.exceptions import (
    ContractViolationError, ProvenanceAnalyticsError, ResourceLimitError, UndefinedMetricError, error_context,
)
from ..utils.logging import get_logger, performance_timer
from ..utils.synthetic import generate_synthetic

logger = get_logger("provad.harness")


@dataclass(frozen=True)
class HarnessSettings:
    """Plan knobs with configuration defaults filled in."""

    seed: int
    shuffles: int
    block_fractions: Tuple[float, ...]
    timeout_s: float
    jobs: int
    precision: str


@dataclass(frozen=True)
class PreparedContext:
    name: str
    context: Context
    truth: GroundTruth
    seed: int


@dataclass(frozen=True)
class StreamSuiteReport:
    """Stream suite output: metric rows plus the per-attack median ranks."""

    results: List[CellResult]
    median_ranks: List[StreamAttackRanks]


def lower_median(values: Sequence[int]) -> int:
    """Median of integer ranks; even counts take the lower of the two middle values."""
    if not values:
        raise ContractViolationError("median of an empty rank list", operation="median_rank_metrics")
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def median_rank_metrics(ranks_by_row: Mapping[str, Sequence[int]], row_ids: Sequence[str],
                        truth: GroundTruth) -> Tuple[float, float, Dict[str, int]]:
    """
    nDCG and AUC of the median-rank ordering.

    Every row gets the lower median of its ranks over the shuffled runs;
    rows are then ordered by median, ties kept in context order, and
    measured like any other ranking.

    Args:
        ranks_by_row: Rank of each row in every shuffled run
        row_ids: Rows in context order
        truth: Attack rows

    Returns:
        (ndcg, auc, median rank per attack)
    """
    medians = [lower_median(ranks_by_row[row_id]) for row_id in row_ids]
    ordering = rank(ScoreVector(row_ids, medians, Polarity.LOW_IS_ANOMALOUS, "avf-stream"), truth)
    ndcg_value, auc_value = ranking_metrics(ordering)
    return ndcg_value, auc_value, {row_id: m for row_id, m in zip(row_ids, medians) if row_id in truth}


def stream_row_ranks(ctx: Context, block_size: int, permutation: Sequence[int],
                     precision: Optional[str] = None, deadline: Optional[Deadline] = None) -> Dict[str, int]:
    """Rank of every row after block-streaming AVF over one shuffled order."""
    ranking = rank(avf_stream(ctx.permuted(permutation), block_size, precision, deadline=deadline))
    return {row_id: p for p, row_id in enumerate(ranking.row_ids, start=1)}


def stream_attack_ranks(ctx: Context, truth: GroundTruth, block_size: int, permutation: Sequence[int],
                        precision: Optional[str] = None, deadline: Optional[Deadline] = None) -> Dict[str, int]:
    """Rank of every attack row after block-streaming AVF over one shuffled order."""
    ranks = stream_row_ranks(ctx, block_size, permutation, precision, deadline)
    return {row_id: p for row_id, p in ranks.items() if row_id in truth}


def block_sizes(fractions: Sequence[float], n: int) -> List[int]:
    """Distinct block sizes ceil(fraction * n), in the order of the fractions."""
    sizes: List[int] = []
    for fraction in fractions:
        size = max(1, math.ceil(fraction * n))
        if size not in sizes:
            sizes.append(size)
    return sizes


def best_cells(results: Sequence[CellResult]) -> List[CellResult]:
    """Best completed cell per (context, algorithm) by nDCG; ties keep the earlier cell."""
    best: Dict[Tuple[str, str], CellResult] = {}
    for result in results:
        if result.status is not CellStatus.OK or result.ndcg is None:
            continue
        key = (result.context, result.algorithm)
        if key not in best or result.ndcg > best[key].ndcg:
            best[key] = result
    return list(best.values())


def _file_stem(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=-]+", "_", text).strip("_")


class HarnessController:
    """
    Controller for benchmark runs.

    Responsibilities:
    - Load plan contexts from files or generate them
    - Score, rank and measure every cell under a per-cell deadline
    - Aggregate shuffled streaming runs by median attack rank
    - Record results through a resumable report writer
    """

    def __init__(self, store: Optional[ContextStoreProtocol] = None,
                 scorer: Optional[ScorerProtocol] = None):
        """Initialize the harness controller."""
        self.store = store or FileContextStore()
        self._score = scorer or score_context

        self._cell_callbacks: List[CellObserverProtocol] = []
        self._status_callbacks: List[Callable[[str], None]] = []

    # Observer pattern methods
    def add_cell_observer(self, callback: CellObserverProtocol) -> None:
        """Add observer for finished cells."""
        self._cell_callbacks.append(callback)

    def add_status_observer(self, callback: Callable[[str], None]) -> None:
        """Add observer for progress messages."""
        self._status_callbacks.append(callback)

    def _notify_cell(self, result: CellResult) -> None:
        for callback in self._cell_callbacks:
            try:
                callback(result)
            except Exception as e:
                logger.error(f"Error in cell callback: {e}")

    def _notify_status(self, message: str) -> None:
        for callback in self._status_callbacks:
            try:
                callback(message)
            except Exception as e:
                logger.error(f"Error in status callback: {e}")

    # Plan preparation
    @staticmethod
    def resolve_settings(plan: ExperimentPlan) -> HarnessSettings:
        defaults = get_config().harness
        return HarnessSettings(
            seed=defaults.seed if plan.seed is None else plan.seed,
            shuffles=plan.shuffles or defaults.shuffles,
            block_fractions=tuple(plan.block_fractions or defaults.block_fractions),
            timeout_s=plan.timeout_s or defaults.timeout_s,
            jobs=plan.jobs or defaults.jobs,
            precision=plan.precision,
        )

    def load_contexts(self, plan: ExperimentPlan, settings: Optional[HarnessSettings] = None) -> List[PreparedContext]:
        """Load or generate every plan context, named as in the plan."""
        settings = settings or self.resolve_settings(plan)
        prepared = []
        for source in plan.contexts:
            seed = settings.seed if source.seed is None else source.seed
            if source.synthetic is not None:
                ctx, truth = generate_synthetic(source.synthetic, seed)
            else:
                ctx = self.store.load_context(source.path)
                truth = self.store.load_ground_truth(source.truth)
            ctx = dataclasses.replace(ctx, name=source.name)
            logger.info(f"Prepared context {source.name}", n=ctx.n, m=ctx.m, attacks=len(truth))
            prepared.append(PreparedContext(source.name, ctx, truth, seed))
        return prepared

    def _execute(self, jobs: int, tasks: List[Callable[[], CellResult]],
                 on_result: Callable[[CellResult], None]) -> List[CellResult]:
        """Run cell tasks on a worker pool; results come back in task order."""
        results: List[Optional[CellResult]] = [None] * len(tasks)
        if jobs <= 1:
            for i, task in enumerate(tasks):
                results[i] = task()
                on_result(results[i])
        else:
            with ThreadPoolExecutor(max_workers=jobs) as executor:
                futures = {executor.submit(task): i for i, task in enumerate(tasks)}
                for future in as_completed(futures):
                    result = future.result()
                    results[futures[future]] = result
                    on_result(result)
        return [r for r in results if r is not None]

    # Batch suite
    def _run_cell(self, pc: PreparedContext, algorithm: str, params: Dict[str, Any],
                  settings: HarnessSettings, curve_dir: Optional[Path]) -> CellResult:
        ctx, truth = pc.context, pc.truth
        unmatched = truth.unmatched(ctx.row_ids)
        fields: Dict[str, Any] = dict(context=pc.name, algorithm=algorithm, params=canonical_params(params),
                                      n=ctx.n, m=ctx.m, attacks=len(truth) - len(unmatched),
                                      unmatched=len(unmatched))
        label = f"{pc.name}/{algorithm} {fields['params']}"
        deadline = Deadline(settings.timeout_s)

        with performance_timer(f"cell {label}", logger) as timer:
            try:
                with error_context(f"cell {label}"):
                    scores = self._score(ctx, algorithm, params, deadline)
                    ranking = rank(scores, truth)
                    fields["reason"] = "; ".join(scores.notes)
                    try:
                        fields["ndcg"], fields["auc"] = ranking_metrics(ranking)
                    except UndefinedMetricError as e:
                        fields["reason"] = e.message
                    if curve_dir is not None:
                        stem = _file_stem(f"{pc.name}_{algorithm}_{fields['params']}")
                        write_curve(tp_curve(ranking), curve_dir / f"{stem}.curve.csv")
                        write_bands(band_positions(ranking), curve_dir / f"{stem}.bands.txt")
            except ResourceLimitError as e:
                fields.update(status=CellStatus.DNF, reason=e.message)
            except ProvenanceAnalyticsError as e:
                fields.update(status=CellStatus.ERROR, reason=e.message)
            except Exception as e:
                fields.update(status=CellStatus.ERROR, reason=f"{type(e).__name__}: {e}")

        return CellResult(wall_ms=round(timer.elapsed_ms, 3), **fields)

    def run_batch_suite(self, plan: ExperimentPlan, resume: bool = True) -> List[CellResult]:
        """
        Score, rank and measure every (context, algorithm, params) cell.

        Args:
            plan: Experiment plan
            resume: Skip cells already present in the plan's JSON-lines report

        Returns:
            One CellResult per cell, in plan order
        """
        settings = self.resolve_settings(plan)
        prepared = self.load_contexts(plan, settings)
        writer = ReportWriter(plan.output_dir)
        done = writer.completed() if resume else {}
        curve_dir = Path(plan.output_dir) / "curves" if plan.write_curves else None

        cells: List[Tuple[PreparedContext, str, Dict[str, Any]]] = []
        for pc in prepared:
            for grid in plan.algorithms:
                accepted = get_algorithm(grid.algorithm).accepted
                for params in grid.cells():
                    if "precision" in accepted and "precision" not in params:
                        params = dict(params, precision=settings.precision)
                    cells.append((pc, grid.algorithm, params))

        ordered: List[Optional[CellResult]] = []
        tasks: List[Callable[[], CellResult]] = []
        for pc, algorithm, params in cells:
            key = f"{pc.name}|{algorithm}|{canonical_params(params)}|None"
            if key in done:
                ordered.append(done[key])
                continue
            ordered.append(None)
            tasks.append(lambda pc=pc, a=algorithm, p=params: self._run_cell(pc, a, p, settings, curve_dir))

        skipped = len(cells) - len(tasks)
        self._notify_status(f"Running {len(tasks)} cells ({skipped} resumed)")
        logger.info("Batch suite started", cells=len(cells), resumed=skipped, jobs=settings.jobs)

        def record(result: CellResult) -> None:
            writer.append(result)
            self._notify_cell(result)

        fresh = iter(self._execute(settings.jobs, tasks, record))
        results = [r if r is not None else next(fresh) for r in ordered]
        writer.finalize(results)
        logger.info("Batch suite finished", cells=len(results),
                    dnf=sum(r.status is CellStatus.DNF for r in results))
        return results

    # Stream suite
    def _run_stream_cell(self, pc: PreparedContext, block_size: int, permutations: List[np.ndarray],
                         settings: HarnessSettings) -> Tuple[CellResult, Optional[StreamAttackRanks]]:
        ctx, truth = pc.context, pc.truth
        unmatched = truth.unmatched(ctx.row_ids)
        fields: Dict[str, Any] = dict(
            context=pc.name, algorithm="avf-stream",
            params=canonical_params({"block_size": block_size, "precision": settings.precision}),
            n=ctx.n, m=ctx.m, attacks=len(truth) - len(unmatched), unmatched=len(unmatched),
            block_size=block_size, shuffles=len(permutations), median_based=True,
        )
        medians: Optional[Dict[str, int]] = None
        deadline = Deadline(settings.timeout_s)

        with performance_timer(f"stream cell {pc.name} block={block_size}", logger) as timer:
            try:
                with error_context(f"stream cell {pc.name} block={block_size}"):
                    ranks_by_row: Dict[str, List[int]] = {row_id: [] for row_id in ctx.row_ids}
                    for permutation in permutations:
                        ranks = stream_row_ranks(ctx, block_size, permutation, settings.precision, deadline)
                        for row_id, position in ranks.items():
                            ranks_by_row[row_id].append(position)
                    fields["ndcg"], fields["auc"], medians = median_rank_metrics(ranks_by_row, ctx.row_ids, truth)
            except UndefinedMetricError as e:
                fields["reason"] = e.message
            except ResourceLimitError as e:
                fields.update(status=CellStatus.DNF, reason=e.message)
            except ProvenanceAnalyticsError as e:
                fields.update(status=CellStatus.ERROR, reason=e.message)
            except Exception as e:
                fields.update(status=CellStatus.ERROR, reason=f"{type(e).__name__}: {e}")

        result = CellResult(wall_ms=round(timer.elapsed_ms, 3), **fields)
        ranks = None if medians is None else StreamAttackRanks(
            context=pc.name, block_size=block_size, shuffles=len(permutations), median_ranks=medians)
        return result, ranks

    def run_stream_suite(self, plan: ExperimentPlan) -> StreamSuiteReport:
        """
        Streaming AVF over seeded shuffles for every block size, plus batch AVF.

        The same permutations are reused for every block size of a context,
        so block sizes are compared on identical record orders.
        """
        settings = self.resolve_settings(plan)
        prepared = self.load_contexts(plan, settings)
        results: List[CellResult] = []
        median_ranks: List[StreamAttackRanks] = []

        for pc in prepared:
            batch = self._run_cell(pc, "avf", {"precision": settings.precision}, settings, None)
            results.append(batch)
            self._notify_cell(batch)

            rng = np.random.default_rng(pc.seed)
            permutations = [rng.permutation(pc.context.n) for _ in range(settings.shuffles)]
            for size in block_sizes(settings.block_fractions, pc.context.n):
                self._notify_status(f"Streaming {pc.name} with block size {size}")
                result, ranks = self._run_stream_cell(pc, size, permutations, settings)
                results.append(result)
                if ranks is not None:
                    median_ranks.append(ranks)
                self._notify_cell(result)

        writer = ReportWriter(plan.output_dir, stem="stream_report")
        writer.finalize(results)
        write_dump("".join(json.dumps(r.model_dump(), sort_keys=True) + "\n" for r in median_ranks),
                   Path(plan.output_dir) / "stream_medians.jsonl")
        return StreamSuiteReport(results, median_ranks)

    def run_plan(self, plan: ExperimentPlan, resume: bool = True) -> List[CellResult]:
        """Run the batch suite and, if requested, the stream suite."""
        results: List[CellResult] = []
        if plan.algorithms:
            results.extend(self.run_batch_suite(plan, resume))
        if plan.stream:
            results.extend(self.run_stream_suite(plan).results)
        return results


def run_scaling_series(sizes: Sequence[int], m: int, seed: int,
                       block_size: int = 1) -> List[Tuple[int, float]]:
    """
    Time streaming AVF on synthetic contexts of growing size.

    Args:
        sizes: Row counts to time
        m: Attribute count of every context
        seed: Generator seed
        block_size: Streaming block size

    Returns:
        (n, seconds) per size
    """
    if m < 2:
        raise ContractViolationError("scaling series needs at least two attributes",
                                     operation="run_scaling_series", parameter="m", value=m)
    background = m - 1
    series = []
    for n in sizes:
        spec = SyntheticSpec(n=n, m=m, patterns=min(5, background), pattern_length=(1, min(5, background)),
                             anomaly_style="rare-singleton", reserved_attributes=1)
        ctx, _ = generate_synthetic(spec, seed)
        with performance_timer(f"avf stream n={n}", logger) as timer:
            avf_stream(ctx, block_size, "float")
        series.append((n, timer.elapsed_ms / 1000.0))
        logger.info("Scaling point", n=n, m=m, seconds=round(timer.elapsed_ms / 1000.0, 4))
    return series
