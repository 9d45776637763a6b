"""
File storage for contexts, events, ground truth, scores, dumps and reports.

All text files are UTF-8 with LF line endings.
"""

import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import pandas as pd
from pydantic import ValidationError

from ..models.context_models import Context, EventRecord, GroundTruth
from ..models.plan_models import REPORT_COLUMNS, CellResult, ExperimentPlan
from ..models.scoring_models import Itemset, Polarity, Rule, Score, ScoreVector
from ..utils.exceptions import ConfigurationError, DataValidationError, StorageError
from ..utils.logging import get_logger

logger = get_logger("provad.storage")

PathLike = Union[str, Path]
ID_COLUMN = "Object_ID"


def _read_text(path: PathLike) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise StorageError(f"{path}: file not found", path=str(path))
    except (OSError, UnicodeDecodeError) as e:
        raise StorageError(f"{path}: cannot read ({e})", path=str(path))


def _write_text(path: PathLike, text: str) -> Path:
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as e:
        raise StorageError(f"{path}: cannot write ({e})", path=str(path))
    return target


# ---------------------------------------------------------------- contexts

def parse_context(text: str, name: str = "custom", source: Optional[str] = None) -> Context:
    """Parse the context CSV shape: ``Object_ID,<attr>...`` then 0/1 rows."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataValidationError("missing header row", source=source, line=1)
    if not header or not header[0].strip():
        raise DataValidationError("header must start with the row id column", source=source, line=1, column=1)

    attributes = tuple(header[1:])
    seen: Dict[str, int] = {}
    for column, attr in enumerate(attributes, start=2):
        if attr in seen:
            raise DataValidationError(f"duplicate attribute '{attr}' (also column {seen[attr]})",
                                      source=source, line=1, column=column, field_value=attr)
        seen[attr] = column

    row_ids: List[str] = []
    rows: List[frozenset] = []
    known_ids: Dict[str, int] = {}
    width = len(header)
    for record in reader:
        line = reader.line_num
        if not record or record == [""]:
            continue
        if len(record) != width:
            raise DataValidationError(f"expected {width} cells, found {len(record)}", source=source, line=line)
        row_id = record[0]
        if not row_id:
            raise DataValidationError("empty row id", source=source, line=line, column=1)
        if row_id in known_ids:
            raise DataValidationError(f"duplicate row id '{row_id}' (first on line {known_ids[row_id]})",
                                      source=source, line=line, column=1, field_value=row_id)
        known_ids[row_id] = line
        bits = set()
        for column, cell in enumerate(record[1:], start=2):
            if cell == "1":
                bits.add(column - 2)
            elif cell != "0":
                raise DataValidationError(f"cell must be 0 or 1, found '{cell}'", source=source,
                                          line=line, column=column, field_value=cell)
        row_ids.append(row_id)
        rows.append(frozenset(bits))

    return Context(name, attributes, tuple(row_ids), tuple(rows))


def format_context(ctx: Context) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow((ID_COLUMN,) + ctx.attributes)
    for row_id, row in zip(ctx.row_ids, ctx.rows):
        writer.writerow([row_id] + ["1" if j in row else "0" for j in range(ctx.m)])
    return buffer.getvalue()


def load_context(path: PathLike, name: Optional[str] = None) -> Context:
    """Load a context CSV; the context is named after the file unless given."""
    ctx = parse_context(_read_text(path), name or Path(path).stem, source=str(path))
    logger.debug(f"Loaded context {ctx.name} from {path}", n=ctx.n, m=ctx.m)
    return ctx


def save_context(ctx: Context, path: PathLike) -> Path:
    return _write_text(path, format_context(ctx))


# ----------------------------------------------------------- events, truth

def iter_events(text: str, source: Optional[str] = None) -> Iterator[EventRecord]:
    """Parse JSON-lines events, one object per non-blank line."""
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataValidationError(f"invalid JSON: {e.msg}", source=source, line=line_number, column=e.colno)
        if not isinstance(payload, dict):
            raise DataValidationError("event must be a JSON object", source=source, line=line_number)
        try:
            yield EventRecord.model_validate(payload)
        except ValidationError as e:
            first = e.errors()[0]
            field_name = ".".join(str(part) for part in first.get("loc", ()))
            raise DataValidationError(f"invalid event field '{field_name}': {first.get('msg')}",
                                      source=source, line=line_number, field_value=first.get("input"))


def load_events(path: PathLike) -> List[EventRecord]:
    events = list(iter_events(_read_text(path), source=str(path)))
    logger.info(f"Loaded {len(events)} events from {path}")
    return events


def parse_ground_truth(text: str) -> GroundTruth:
    ids = set()
    for line in text.splitlines():
        entry = line.strip()
        if entry and not entry.startswith("#"):
            ids.add(entry)
    return GroundTruth(frozenset(ids))


def load_ground_truth(path: PathLike) -> GroundTruth:
    """One row id per line; blank lines and '#' comments are skipped, duplicates collapse."""
    return parse_ground_truth(_read_text(path))


def save_ground_truth(truth: GroundTruth, path: PathLike) -> Path:
    return _write_text(path, "".join(f"{row_id}\n" for row_id in sorted(truth.attack_ids)))


# ------------------------------------------------------------------ scores

def format_score(value: Score) -> str:
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    return repr(float(value))


def parse_score(text: str) -> Score:
    text = text.strip()
    if "/" in text or (text.lstrip("-").isdigit()):
        return Fraction(text)
    return float(text)


def format_scores(scores: ScoreVector) -> str:
    """Scores CSV with a metadata comment carrying algorithm, params and polarity."""
    params = json.dumps(scores.params, sort_keys=True, separators=(",", ":"), default=str)
    lines = [f"# algorithm={scores.algorithm} params={params} polarity={scores.polarity.value}"]
    lines.extend(f"# note={note}" for note in scores.notes)
    lines.append("row_id,score")
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    for row_id, value in zip(scores.row_ids, scores.scores):
        writer.writerow([row_id, format_score(value)])
    return "\n".join(lines) + "\n" + buffer.getvalue()


def parse_scores(text: str, source: Optional[str] = None) -> ScoreVector:
    metadata: Dict[str, str] = {}
    notes: List[str] = []
    body: List[str] = []
    for line in text.splitlines():
        if line.startswith("# note="):
            notes.append(line[len("# note="):])
        elif line.startswith("#"):
            for token in ("algorithm", "polarity"):
                marker = f"{token}="
                if marker in line:
                    metadata[token] = line.split(marker, 1)[1].split()[0]
            if "params=" in line:
                metadata["params"] = line.split("params=", 1)[1].rsplit(" polarity=", 1)[0]
        else:
            body.append(line)

    if "polarity" not in metadata:
        raise DataValidationError("scores file has no polarity header", source=source, line=1)
    try:
        polarity = Polarity(metadata["polarity"])
    except ValueError:
        raise DataValidationError(f"unknown polarity '{metadata['polarity']}'", source=source, line=1)
    try:
        params = json.loads(metadata.get("params", "{}"))
    except json.JSONDecodeError:
        params = {}

    reader = csv.reader(io.StringIO("\n".join(body)))
    header = next(reader, None)
    if header != ["row_id", "score"]:
        raise DataValidationError("expected a 'row_id,score' header", source=source)
    row_ids: List[str] = []
    values: List[Score] = []
    for record in reader:
        if not record:
            continue
        if len(record) != 2:
            raise DataValidationError(f"expected 2 cells, found {len(record)}", source=source,
                                      line=reader.line_num)
        try:
            values.append(parse_score(record[1]))
        except (ValueError, ZeroDivisionError):
            raise DataValidationError(f"invalid score '{record[1]}'", source=source, line=reader.line_num,
                                      column=2, field_value=record[1])
        row_ids.append(record[0])
    return ScoreVector(row_ids, values, polarity, metadata.get("algorithm", ""), params, notes)


def load_scores(path: PathLike) -> ScoreVector:
    return parse_scores(_read_text(path), source=str(path))


def save_scores(scores: ScoreVector, path: PathLike) -> Path:
    return _write_text(path, format_scores(scores))


# ------------------------------------------------------------------- dumps

def _names(items: Iterable[int], attributes: Sequence[str]) -> List[str]:
    return [attributes[j] for j in items]


def dump_itemsets(itemsets: Sequence[Itemset], attributes: Sequence[str]) -> str:
    """One line per itemset: tab-separated attribute names, then the support."""
    return "".join("\t".join(_names(i.items, attributes) + [str(i.support)]) + "\n" for i in itemsets)


def dump_rules(rules: Sequence[Rule], attributes: Sequence[str]) -> str:
    """``antecedent<TAB>consequent<TAB>support<TAB>confidence``; names comma-separated."""
    return "".join(
        f"{','.join(_names(r.antecedent, attributes))}\t{','.join(_names(r.consequent, attributes))}"
        f"\t{r.support}\t{r.confidence.numerator}/{r.confidence.denominator}\n"
        for r in rules
    )


def dump_code_table(ct) -> str:
    """``items<TAB>usage<TAB>codelen_bits`` per entry, in cover order."""
    return "".join(
        f"{','.join(_names(e.items, ct.item_names))}\t{e.usage}\t{e.code_length:.6f}\n" for e in ct.entries
    )


def dump_partition(partition: Sequence[Sequence[int]], attributes: Sequence[str]) -> str:
    """One attribute group per line, names comma-separated."""
    return "".join(",".join(_names(group, attributes)) + "\n" for group in partition)


def write_dump(text: str, path: PathLike) -> Path:
    return _write_text(path, text)


# ----------------------------------------------------------------- reports

def load_plan(path: PathLike) -> ExperimentPlan:
    """Parse and validate a JSON experiment plan; relative paths resolve against its directory."""
    text = _read_text(path)
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise DataValidationError(f"plan is not valid JSON: {e.msg}", source=str(path), line=e.lineno,
                                  column=e.colno)
    try:
        plan = ExperimentPlan.model_validate(payload)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first.get("loc", ()))
        raise ConfigurationError(f"invalid plan {path}: {location}: {first.get('msg')}",
                                 setting_name=location or "plan")
    base = Path(path).parent
    for source in plan.contexts:
        if source.path is not None and not Path(source.path).is_absolute():
            source.path = str(base / source.path)
        if source.truth is not None and not Path(source.truth).is_absolute():
            source.truth = str(base / source.truth)
    return plan


def write_curve(curve: Sequence[Tuple[float, float]], path: PathLike) -> Path:
    frame = pd.DataFrame(list(curve), columns=["fraction_rows", "fraction_attacks"])
    return _write_text(path, frame.to_csv(index=False, lineterminator="\n"))


def write_bands(positions: Sequence[int], path: PathLike) -> Path:
    return _write_text(path, "".join(f"{p}\n" for p in positions))


class ReportWriter:
    """Append-only JSON-lines report with a final CSV; resumable by cell key."""

    def __init__(self, output_dir: PathLike, stem: str = "report"):
        self.output_dir = Path(output_dir)
        self.jsonl_path = self.output_dir / f"{stem}.jsonl"
        self.csv_path = self.output_dir / f"{stem}.csv"
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StorageError(f"{output_dir}: cannot create output directory ({e})", path=str(output_dir))

    def completed(self) -> Dict[str, CellResult]:
        """Cells already recorded by an earlier (possibly interrupted) run."""
        if not self.jsonl_path.exists():
            return {}
        done: Dict[str, CellResult] = {}
        for line_number, line in enumerate(_read_text(self.jsonl_path).splitlines(), start=1):
            if not line.strip():
                continue
            try:
                result = CellResult.model_validate_json(line)
            except ValidationError:
                logger.warning(f"Ignoring unreadable report line {line_number} in {self.jsonl_path}")
                continue
            done[result.key] = result
        return done

    def append(self, result: CellResult) -> None:
        try:
            with open(self.jsonl_path, "a", encoding="utf-8", newline="\n") as f:
                f.write(result.model_dump_json() + "\n")
        except OSError as e:
            raise StorageError(f"{self.jsonl_path}: cannot append ({e})", path=str(self.jsonl_path))

    def finalize(self, results: Sequence[CellResult]) -> Path:
        frame = report_frame(results)
        return _write_text(self.csv_path, frame.to_csv(index=False, lineterminator="\n"))


def report_frame(results: Sequence[CellResult]) -> pd.DataFrame:
    rows = [r.model_dump(mode="json") for r in results]
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


class FileContextStore:
    """File-backed context store used by the harness."""

    def load_context(self, path: PathLike) -> Context:
        return load_context(path)

    def load_ground_truth(self, path: PathLike) -> GroundTruth:
        return load_ground_truth(path)
