"""
Command-line interface for the provenance anomaly toolkit.

Subcommands:
  extract   build Boolean contexts from an audit-event JSON-lines file
  score     score a context CSV with one algorithm
  evaluate  compute nDCG/AUC of a scores file against ground truth
  bench     run an experiment plan (batch and stream suites)
  synth     write a planted-anomaly synthetic context

stdout carries machine-readable output only; diagnostics go to stderr.
"""

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from src import __version__
from src.business.comprex import comprex_build
from src.business.context_builder import extract_all, extract_context, summarize_context
from src.business.itemsets import mine_frequent, mine_rules
from src.business.krimp import KrimpSettings, krimp_build
from src.business.metrics import band_positions, rank, ranking_metrics, tp_curve
from src.business.scoring_service import algorithm_names, score_context
from src.config.config import ConfigurationManager, get_config, set_config_manager
from src.controllers.harness_controller import HarnessController, best_cells
from src.models.context_models import Context, ContextKind
from src.models.plan_models import SyntheticSpec
from src.models.scoring_models import TiePolicy
from src.services.storage import (
    dump_code_table, dump_itemsets, dump_partition, dump_rules, format_scores, load_context, load_events,
    load_ground_truth, load_plan, load_scores, report_frame, save_context, save_ground_truth, save_scores,
    write_curve, write_dump,
)
from src.utils.deadline import Deadline
from src.utils.exceptions import ConfigurationError, ContractViolationError, exit_code_for
from src.utils.logging import configure_logging, get_logger
from src.utils.synthetic import generate_synthetic

logger = get_logger("provad.cli")

EXTRACT_KINDS = ("pe", "px", "pp", "pn", "all")


def parse_block(text: str, n: int) -> int:
    """
    Interpret ``--block``: a fraction of the rows when it has a decimal point
    or is below 1, otherwise an absolute record count.
    """
    try:
        value = float(text)
    except ValueError:
        raise ContractViolationError(f"--block must be a number, got '{text}'", operation="score",
                                     parameter="block", value=text)
    if "." in text or value < 1:
        if not 0 < value <= 1:
            raise ContractViolationError(f"block fraction must lie in (0, 1], got {text}", operation="score",
                                         parameter="block", value=text)
        return max(1, math.ceil(value * n))
    if not value.is_integer():
        raise ContractViolationError(f"block size must be a whole number, got {text}", operation="score",
                                     parameter="block", value=text)
    return int(value)


def _write_model_dump(ctx: Context, algorithm: str, params: Dict[str, Any], path: str,
                      deadline: Deadline) -> None:
    """Write the mined model behind a pattern-based score (itemsets, rules, code table or partition)."""
    if algorithm == "fpof":
        text = dump_itemsets(mine_frequent(ctx, params["minsupp"], deadline=deadline), ctx.attributes)
    elif algorithm == "od":
        frequents = mine_frequent(ctx, params["minsupp"], deadline=deadline)
        text = dump_rules(mine_rules(frequents, params["minconf"], deadline), ctx.attributes)
    elif algorithm == "oc3":
        settings = KrimpSettings.from_config(absent_values=params.get("absent_values"))
        text = dump_code_table(krimp_build(ctx, params.get("minsupp"), settings, deadline))
    elif algorithm == "comprex":
        model = comprex_build(ctx, params.get("budget"), params.get("absent_values"), deadline=deadline)
        text = dump_partition(model.partition, ctx.attributes)
    else:
        raise ContractViolationError(f"{algorithm} has no model to dump", operation="score", parameter="dump")
    write_dump(text, path)
    logger.info(f"Wrote {algorithm} model to {path}")


def cmd_extract(args: argparse.Namespace) -> int:
    events = load_events(args.events)
    if args.kind == "all":
        contexts = extract_all(events, args.keep_empty_rows)
    else:
        ctx = extract_context(events, ContextKind.parse(args.kind), args.keep_empty_rows)
        contexts = {ctx.name: ctx}

    out_dir = Path(args.out_dir)
    for name, ctx in contexts.items():
        path = save_context(ctx, out_dir / f"{name}.csv")
        summary = summarize_context(ctx)
        print(f"{name}\t{summary.n}x{summary.m}\t{summary.density:.4f}\t{path}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    ctx = load_context(args.context)
    params: Dict[str, Any] = {
        "minsupp": args.minsupp,
        "minconf": args.minconf,
        "precision": args.precision,
        "budget": args.budget,
        "absent_values": args.absent_values,
        "initial_probability": args.initial_probability,
    }
    if args.block is not None:
        params["block_size"] = parse_block(args.block, ctx.n)
    deadline = Deadline(get_config().harness.timeout_s)

    scores = score_context(ctx, args.algo, {k: v for k, v in params.items() if v is not None}, deadline)
    if args.out:
        save_scores(scores, args.out)
    else:
        sys.stdout.write(format_scores(scores))
    if args.dump:
        _write_model_dump(ctx, args.algo, dict(scores.params), args.dump, deadline)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    scores = load_scores(args.scores)
    truth = load_ground_truth(args.truth)
    tie_policy = {"stable": TiePolicy.STABLE, "average-rank": TiePolicy.AVERAGE_RANK}.get(args.tie_policy)
    ranking = rank(scores, truth)
    ndcg_value, auc_value = ranking_metrics(ranking, tie_policy)

    warnings: List[str] = [f"truth id '{row_id}' is not a scored row" for row_id in ranking.unmatched]
    warnings.extend(scores.notes)
    report = {
        "algorithm": scores.algorithm,
        "polarity": scores.polarity.value,
        "tie_policy": tie_policy.value if tie_policy else "default",
        "n": len(ranking),
        "attacks": ranking.attack_count,
        "ndcg": ndcg_value,
        "auc": auc_value,
        "band_positions": band_positions(ranking),
        "warnings": warnings,
    }
    if args.curve:
        write_curve(tp_curve(ranking), args.curve)
    print(json.dumps(report, indent=2))
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    plan = load_plan(args.plan)
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.timeout_s is not None:
        overrides["timeout_s"] = args.timeout_s
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    if overrides:
        plan = plan.model_copy(update=overrides)

    controller = HarnessController()
    controller.add_status_observer(lambda message: logger.info(message))
    controller.add_cell_observer(
        lambda result: logger.info(f"{result.context}/{result.algorithm} {result.params}: {result.status.value}",
                                   ndcg=result.ndcg, wall_ms=result.wall_ms))
    results = controller.run_plan(plan, resume=not args.no_resume)
    sys.stdout.write(report_frame(best_cells(results)).to_csv(index=False, lineterminator="\n"))
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        spec = SyntheticSpec(n=args.n, m=args.m, patterns=args.patterns,
                             pattern_length=(args.min_length, args.max_length),
                             anomalies=args.anomalies, anomaly_style=args.style, noise=args.noise,
                             disjoint_patterns=args.disjoint_patterns)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first.get("loc", ()))
        raise ConfigurationError(f"invalid synthetic spec: {location}: {first.get('msg')}",
                                 setting_name=location)
    seed = get_config().harness.seed if args.seed is None else args.seed
    ctx, truth = generate_synthetic(spec, seed)
    out_dir = Path(args.out_dir)
    context_path = save_context(ctx, out_dir / f"{args.name}.csv")
    truth_path = save_ground_truth(truth, out_dir / f"{args.name}.truth")
    print(f"{args.name}\t{ctx.n}x{ctx.m}\t{context_path}\t{truth_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="provad",
        description="Rank processes in provenance contexts by how anomalous they look",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  provad extract --kind all --out-dir contexts events.jsonl
  provad score --algo avf --precision rational contexts/PE.csv
  provad score --algo avf-stream --block 0.01 contexts/PE.csv --out pe.scores
  provad evaluate pe.scores truth.txt
  provad bench plan.json --jobs 4
        """,
    )
    parser.add_argument("--version", action="version", version=f"provad {__version__}")
    parser.add_argument("--config", help="JSON settings file (also PROVAD_CONFIG)")
    parser.add_argument("--log-level", help="Log level for stderr diagnostics")
    parser.add_argument("--seed", type=int, help="Seed for shuffles and synthetic data")
    parser.add_argument("--timeout-s", type=float, help="Per-computation timeout in seconds")
    parser.add_argument("--jobs", type=int, help="Worker count for benchmark cells")
    sub = parser.add_subparsers(dest="command", required=True)

    extract = sub.add_parser("extract", help="Build contexts from audit events")
    extract.add_argument("events", help="JSON-lines event file")
    extract.add_argument("--kind", choices=EXTRACT_KINDS, default="all")
    extract.add_argument("--out-dir", default=".")
    extract.add_argument("--keep-empty-rows", action=argparse.BooleanOptionalAction, default=None,
                         help="Keep processes without any attribute of the kind")
    extract.set_defaults(handler=cmd_extract)

    score = sub.add_parser("score", help="Score a context")
    score.add_argument("context", help="Context CSV file")
    score.add_argument("--algo", required=True, choices=algorithm_names())
    score.add_argument("--minsupp", type=float)
    score.add_argument("--minconf", type=float)
    score.add_argument("--block", help="Streaming block: fraction of rows (0.01) or record count (100)")
    score.add_argument("--precision", choices=("rational", "float"))
    score.add_argument("--budget", type=int, help="CompreX pair-evaluation budget")
    score.add_argument("--absent-values", action=argparse.BooleanOptionalAction, default=None)
    score.add_argument("--initial-probability", type=float)
    score.add_argument("--out", help="Write scores here instead of stdout")
    score.add_argument("--dump", help="Write the mined itemsets, rules, code table or partition here")
    score.set_defaults(handler=cmd_score)

    evaluate = sub.add_parser("evaluate", help="Rank scores and compute nDCG/AUC")
    evaluate.add_argument("scores", help="Scores CSV written by 'score'")
    evaluate.add_argument("truth", help="Ground-truth file, one row id per line")
    evaluate.add_argument("--tie-policy", choices=("stable", "average-rank"),
                          help="Tie policy for both metrics (default: stable nDCG, average-rank AUC)")
    evaluate.add_argument("--curve", help="Write the true-positive curve CSV here")
    evaluate.set_defaults(handler=cmd_evaluate)

    bench = sub.add_parser("bench", help="Run an experiment plan")
    bench.add_argument("plan", help="JSON experiment plan")
    bench.add_argument("--output-dir")
    bench.add_argument("--no-resume", action="store_true", help="Re-run cells already in the report")
    bench.set_defaults(handler=cmd_bench)

    synth = sub.add_parser("synth", help="Write a planted-anomaly synthetic context")
    synth.add_argument("--n", type=int, required=True)
    synth.add_argument("--m", type=int, required=True)
    synth.add_argument("--patterns", type=int, default=5)
    synth.add_argument("--min-length", type=int, default=2)
    synth.add_argument("--max-length", type=int, default=5)
    synth.add_argument("--anomalies", type=int)
    synth.add_argument("--style", choices=("rare-singleton", "rare-combination", "missing-expected"),
                       default="rare-combination")
    synth.add_argument("--noise", type=float, default=0.0)
    synth.add_argument("--disjoint-patterns", action="store_true")
    synth.add_argument("--name", default="synthetic")
    synth.add_argument("--out-dir", default=".")
    synth.set_defaults(handler=cmd_synth)
    return parser


def _setup(args: argparse.Namespace) -> None:
    manager = ConfigurationManager(args.config)
    if args.log_level:
        manager.update_setting("logging", "log_level", args.log_level.upper())
    if args.seed is not None:
        manager.update_setting("harness", "seed", args.seed)
    if args.timeout_s is not None:
        manager.update_setting("harness", "timeout_s", args.timeout_s)
    if args.jobs is not None:
        manager.update_setting("harness", "jobs", args.jobs)
    set_config_manager(manager)
    cfg = manager.config.logging
    configure_logging(cfg.log_level, cfg.log_file, cfg.max_log_size, cfg.log_retention_days)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    try:
        _setup(args)
        return args.handler(args)
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return 130
    except Exception as e:
        code = exit_code_for(e)
        if code == 1:
            logger.exception(f"Unexpected error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
