"""
Tests for context extraction, joins and the context, truth and score files.
"""

import random
from fractions import Fraction

import pytest

from src.business.context_builder import extract_all, extract_context, join_contexts, summarize_context
from src.business.itemsets import mine_frequent, mine_rules
from src.models.context_models import Context, ContextKind, EventRecord, GroundTruth
from src.models.scoring_models import Polarity, ScoreVector
from src.services.storage import (dump_partition, dump_rules, format_scores, iter_events, load_context,
                                  load_ground_truth, parse_context, parse_ground_truth, parse_scores, save_context)
from src.utils.exceptions import ConfigurationError, DataValidationError, InternalInvariantError, StorageError

from conftest import make_random_context

TABLE_EVENTS = ["EVENT_ACCEPT", "EVENT_BIND", "EVENT_CHANGE_PRINCIPAL", "EVENT_CLONE", "EVENT_CLOSE",
                "EVENT_CONNECT", "EVENT_CREATE_OBJECT", "EVENT_EXECUTE", "EVENT_EXIT", "EVENT_FORK",
                "EVENT_LINK", "EVENT_LOADLIBRARY", "EVENT_MMAP", "EVENT_MODIFY_FILE_ATTRIBUTES",
                "EVENT_MPROTECT", "EVENT_OPEN", "EVENT_OTHER", "EVENT_READ", "EVENT_RECVMSG", "EVENT_SENDMSG",
                "EVENT_WRITE"]


def _event(pid, **fields):
    return EventRecord(pid=pid, **fields)


def test_duplicate_events_collapse_to_presence():
    events = [_event("p1", event="EVENT_READ"), _event("p1", event="EVENT_READ"), _event("p2", event="EVENT_WRITE")]
    ctx = extract_context(events, ContextKind.PE)
    assert ctx.row_ids == ("p1", "p2")
    assert ctx.attributes == ("EVENT_READ", "EVENT_WRITE")
    assert ctx.rows == (frozenset({0}), frozenset({1}))


def test_empty_stream_gives_empty_context():
    ctx = extract_context([], "pe")
    assert (ctx.n, ctx.m) == (0, 0)


def test_network_context_matches_presence_oracle():
    rng = random.Random(9)
    events = [_event(rng.choice(["p1", "p2", "p3"]), ip=rng.choice(["10.0.0.1", "10.0.0.2"]),
                     port=rng.choice([80, 443])) for _ in range(20)]
    ctx = extract_context(events, ContextKind.PN)
    assert ctx.m == 4
    for row_id, row in zip(ctx.row_ids, ctx.rows):
        for j, name in enumerate(ctx.attributes):
            seen = any(e.process_id == row_id and name in (e.remote_ip, f"port:{e.remote_port}") for e in events)
            assert (j in row) == seen


def test_process_and_parent_contexts():
    events = [_event("p1", exec="bash", parent_exec="sshd"), _event("p2", exec="curl", parent_exec="bash"),
              _event("p1", exec="bash", parent_exec="sshd")]
    px = extract_context(events, ContextKind.PX)
    pp = extract_context(events, ContextKind.PP)
    assert px.attributes == ("bash", "curl")
    assert pp.attributes == ("sshd", "bash")
    assert pp.rows == (frozenset({0}), frozenset({1}))


def test_empty_rows_follow_configuration():
    events = [_event("p1", event="EVENT_READ"), _event("p2", ip="1.2.3.4")]
    assert extract_context(events, ContextKind.PN).row_ids == ("p1", "p2")
    assert extract_context(events, ContextKind.PN, keep_empty_rows=False).row_ids == ("p2",)


def test_unknown_kind_is_a_configuration_error():
    with pytest.raises(ConfigurationError):
        extract_context([], "PZ")
    with pytest.raises(ConfigurationError):
        extract_context([], ContextKind.PA)


def test_join_fills_missing_rows_with_zeros():
    pe = Context("PE", ("EVENT_READ",), ("p1", "p2"), (frozenset({0}), frozenset({0})))
    pn = Context("PN", ("1.2.3.4", "80"), ("p2",), (frozenset({0, 1}),))
    pa = join_contexts([pe, pn])
    assert pa.attributes == ("PE:EVENT_READ", "PN:1.2.3.4", "PN:80")
    assert pa.row_ids == ("p1", "p2")
    assert pa.rows == (frozenset({0}), frozenset({0, 1, 2}))


def test_join_of_one_context_only_renames():
    ctx = make_random_context(4, n=6, m=3)
    joined = join_contexts([ctx])
    assert joined.rows == ctx.rows
    assert joined.attributes == tuple(f"{ctx.name}:{a}" for a in ctx.attributes)


def test_join_needs_parts_and_sums_columns():
    with pytest.raises(InternalInvariantError):
        join_contexts([])
    parts = [Context(name, ctx.attributes, ctx.row_ids, ctx.rows)
             for name, ctx in zip(("PE", "PX", "PP", "PN"), (make_random_context(s, m=2 + s) for s in range(4)))]
    assert join_contexts(parts).m == sum(p.m for p in parts)


def test_extract_all_builds_five_contexts():
    events = [_event("p1", event="EVENT_READ", exec="bash", parent_exec="sshd", ip="1.2.3.4", port=22)]
    contexts = extract_all(events)
    assert list(contexts) == ["PE", "PX", "PP", "PN", "PA"]
    assert contexts["PA"].m == 5


def test_minimal_context_file():
    ctx = parse_context("Object_ID,EVENT_READ\np1,1\n")
    assert (ctx.n, ctx.m) == (1, 1)
    assert ctx.rows == (frozenset({0}),)


def test_context_round_trip(tmp_path):
    ctx = make_random_context(8, n=100, m=20)
    path = save_context(ctx, tmp_path / "ctx.csv")
    loaded = load_context(path)
    assert loaded == ctx
    assert loaded.name == "ctx"


def test_table_shaped_file():
    rows = {
        "e2a4e818-1a2b-4c3d-9e8f-000000000001": {"EVENT_OTHER", "EVENT_WRITE", "EVENT_READ"},
        "a1b2c3d4-1a2b-4c3d-9e8f-000000000002": {"EVENT_READ", "EVENT_OPEN", "EVENT_CLOSE", "EVENT_MMAP"},
        "b1b2c3d4-1a2b-4c3d-9e8f-000000000003": {"EVENT_EXECUTE", "EVENT_FORK"},
        "c1b2c3d4-1a2b-4c3d-9e8f-000000000004": {"EVENT_CONNECT", "EVENT_SENDMSG", "EVENT_RECVMSG"},
    }
    lines = [",".join(["Object_ID"] + TABLE_EVENTS)]
    lines += [",".join([row_id] + ["1" if e in events else "0" for e in TABLE_EVENTS]) for row_id, events in
              rows.items()]
    ctx = parse_context("\n".join(lines) + "\n")
    assert (ctx.n, ctx.m) == (4, 21)
    first = ctx.rows[0]
    assert {ctx.attributes[j] for j in first} == {"EVENT_OTHER", "EVENT_WRITE", "EVENT_READ"}
    summary = summarize_context(ctx)
    assert summary.ones == 12
    assert summary.density == pytest.approx(12 / (4 * 21))


@pytest.mark.parametrize("text, line, column", [
    ("Object_ID,a,b\np1,1,2\n", 2, 3),
    ("Object_ID,a,a\np1,1,0\n", 1, 3),
    ("Object_ID,a\np1,1\np1,0\n", 3, 1),
    ("Object_ID,a\np1,1,0\n", 2, None),
])
def test_malformed_context_files(text, line, column):
    with pytest.raises(DataValidationError) as excinfo:
        parse_context(text, source="bad.csv")
    assert excinfo.value.line == line
    assert excinfo.value.column == column
    assert "bad.csv" in str(excinfo.value)


def test_ground_truth_file(tmp_path):
    truth = parse_ground_truth("# attack processes\nP1337\n\nP1337\nP9\n")
    assert truth == GroundTruth(frozenset({"P1337", "P9"}))
    with pytest.raises(StorageError):
        load_ground_truth(tmp_path / "missing.truth")


def test_event_lines_report_positions():
    events = list(iter_events('{"pid": 17, "event": "EVENT_READ"}\n\n{"pid": "P2", "port": 80}\n'))
    assert [e.process_id for e in events] == ["17", "P2"]
    with pytest.raises(DataValidationError) as excinfo:
        list(iter_events('{"pid": "P1"}\n{"pid": \n'))
    assert excinfo.value.line == 2
    with pytest.raises(DataValidationError):
        list(iter_events('{"pid": "P1", "port": 70000}\n'))


def test_scores_file_keeps_polarity_and_exact_values():
    scores = ScoreVector(("P17", "P1337"), (Fraction(8, 3), Fraction(4, 3)), Polarity.LOW_IS_ANOMALOUS, "avf",
                         {"precision": "rational"}, ("a note",))
    parsed = parse_scores(format_scores(scores))
    assert parsed == scores
    assert parsed.params == {"precision": "rational"}
    assert parsed.notes == ("a note",)
    with pytest.raises(DataValidationError):
        parse_scores("row_id,score\nP1,1\n")


def test_model_dumps_use_attribute_names(running_example):
    ctx, _ = running_example
    rules = mine_rules(mine_frequent(ctx, 0.5), 0.9)
    assert sorted(dump_rules(rules, ctx.attributes).splitlines()) == ["abc.com\txyz.com\t3\t1/1",
                                                                       "xyz.com\tabc.com\t3\t1/1"]
    assert dump_partition([[0, 2], [1]], ctx.attributes) == "abc.com,evil.com\nxyz.com\n"


def test_context_kind_accepts_members_and_names():
    assert ContextKind.parse(ContextKind.PN) is ContextKind.PN
    assert ContextKind.parse(" pe ") is ContextKind.PE
    events = [_event("p1", event="EVENT_READ")]
    for kind in (ContextKind.PE, "PE", "pe"):
        assert extract_context(events, kind).name == "PE"
    with pytest.raises(ConfigurationError):
        ContextKind.parse("PQ")


def test_port_columns_never_merge_with_ip_values():
    events = [_event("p1", ip="80"), _event("p2", port=80)]
    ctx = extract_context(events, ContextKind.PN)
    assert ctx.attributes == ("80", "port:80")
    assert ctx.rows == (frozenset({0}), frozenset({1}))
