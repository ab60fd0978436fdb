"""Ingest: discovery, timestamp parsing, assembly, consolidation."""

import string
from datetime import datetime, timezone
from pathlib import Path

import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from logan import ingest
from logan.config import IngestConfig
from logan.ingest import (
    IngestError,
    assemble_records,
    build_format_table,
    consolidate,
    discover,
    ingest_paths,
    parse_timestamp,
)

TABLE = build_format_table(["default"])


def utc(*args):
    return datetime(*args, tzinfo=timezone.utc)


# ---------------------------------------------------------------------------
# discover


def test_discover_excludes_binary(tmp_path):
    (tmp_path / "a.log").write_text("2024-01-01 00:00:00 a\n")
    (tmp_path / "b.log").write_text("2024-01-01 00:00:01 b\n")
    (tmp_path / "img.png").write_bytes(b"\x89PNG\x00\x1a" + b"\0" * 32)
    files = discover([tmp_path])
    assert [Path(f.path).name for f in files] == ["a.log", "b.log"]


def test_discover_empty_dir(tmp_path):
    assert discover([tmp_path]) == []


def test_discover_nested_glob_sorted(tmp_path):
    # Hand-enumerated fixture tree; expectation listed explicitly below.
    (tmp_path / "svc1").mkdir()
    (tmp_path / "svc2" / "inner").mkdir(parents=True)
    (tmp_path / "top.log").write_text("x\n")
    (tmp_path / "top.txt").write_text("x\n")
    (tmp_path / "svc1" / "a.log").write_text("x\n")
    (tmp_path / "svc2" / "b.log").write_text("x\n")
    (tmp_path / "svc2" / "inner" / "c.log").write_text("x\n")
    files = discover([tmp_path], include_globs=["**/*.log"])
    got = [str(Path(f.path).relative_to(tmp_path)) for f in files]
    assert got == ["svc1/a.log", "svc2/b.log", "svc2/inner/c.log", "top.log"]
    assert [f.index for f in files] == [0, 1, 2, 3]


def test_discover_exclude_glob(tmp_path):
    (tmp_path / "keep.log").write_text("x\n")
    (tmp_path / "skip.log").write_text("x\n")
    files = discover([tmp_path], ["**/*.log"], ["**/skip*"])
    assert [Path(f.path).name for f in files] == ["keep.log"]


def test_discover_missing_root_fatal(tmp_path):
    with pytest.raises(IngestError):
        discover([tmp_path / "nope"])


def test_discover_archive_root_rejected(tmp_path):
    arc = tmp_path / "dump.tar.gz"
    arc.write_bytes(b"\x1f\x8b fake")
    with pytest.raises(IngestError, match="archive"):
        discover([arc])


def test_discover_archive_in_tree_warns(tmp_path):
    (tmp_path / "a.log").write_text("x\n")
    (tmp_path / "old.zip").write_bytes(b"PK fake")
    warnings: list[str] = []
    files = discover([tmp_path], warnings=warnings)
    assert [Path(f.path).name for f in files] == ["a.log"]
    assert any("archive" in w for w in warnings)


def test_discover_counts(tmp_path):
    (tmp_path / "a.log").write_bytes(b"one\ntwo\nthree")  # no trailing newline
    f = discover([tmp_path])[0]
    assert f.byte_size == 13
    assert f.line_count == 3


# ---------------------------------------------------------------------------
# parse_timestamp


def test_parse_plain_datetime_with_pid():
    line = "2023-07-17 20:26:44 3539663 [INFO ] [tid7f0ee] Sent http code=200"
    ts, prefix = parse_timestamp(line, TABLE)
    assert ts == utc(2023, 7, 17, 20, 26, 44)
    assert line[prefix:].startswith("3539663")


def test_parse_no_timestamp():
    assert parse_timestamp("no timestamp here", TABLE) is None


def test_parse_zoned_pdt():
    # PDT is UTC-7, so 23:58 on the 23rd is 06:58 on the 24th in UTC.
    line = "2021-04-23 23:58:41.438 PDT I | mux.go:330: rpc error"
    ts, prefix = parse_timestamp(line, TABLE)
    assert ts == utc(2021, 4, 24, 6, 58, 41, 438000)
    assert line[prefix:].startswith("I |")


def test_parse_error_word_not_a_zone():
    # ERROR after the seconds must not be mistaken for a zone abbreviation.
    line = "2023-01-01 00:00:00 ERROR disk full"
    ts, prefix = parse_timestamp(line, TABLE)
    assert ts == utc(2023, 1, 1)
    assert line[prefix:] == "ERROR disk full"


def test_parse_iso_t_and_offset():
    ts, _ = parse_timestamp("2024-10-20T14:30:00.123+02:00 x", TABLE)
    assert ts == utc(2024, 10, 20, 12, 30, 0, 123000)
    ts, _ = parse_timestamp("2024-10-20T14:30:00Z x", TABLE)
    assert ts == utc(2024, 10, 20, 14, 30)


def test_parse_yy_slash():
    ts, _ = parse_timestamp("17/06/09 20:10:40 INFO executor", TABLE)
    assert ts == utc(2017, 6, 9, 20, 10, 40)


def test_parse_syslog_defaults_year():
    ts, _ = parse_timestamp("Jun  9 06:06:20 combo sshd: fail", TABLE)
    assert ts == utc(1900, 6, 9, 6, 6, 20)


def test_parse_epoch_millis_prefix_only():
    ts, _ = parse_timestamp("1700000000000 worker up", TABLE)
    assert ts == datetime.fromtimestamp(1700000000.0, tz=timezone.utc)
    # mid-line long digit runs are not epoch timestamps
    assert parse_timestamp("counter 1700000000000 reached", TABLE) is None


def test_parse_beyond_window_ignored():
    line = " " * 70 + "2024-01-01 00:00:00 late"
    assert parse_timestamp(line, TABLE) is None


def test_parse_invalid_calendar_date():
    assert parse_timestamp("2023-13-45 99:99:99 junk", TABLE) is None


def test_unknown_format_name():
    with pytest.raises(IngestError):
        build_format_table(["not-a-format"])


# ---------------------------------------------------------------------------
# assemble_records


def _assemble(tmp_path, text, name="f.log"):
    p = tmp_path / name
    p.write_text(text)
    src = discover([tmp_path], include_globs=[name])[0]
    return assemble_records(src, TABLE)


def test_assemble_continuation(tmp_path):
    recs = _assemble(
        tmp_path,
        "2023-01-01 00:00:00 ERROR x\n  at frame1\n  at frame2\n",
    )
    assert len(recs) == 1
    assert recs[0].line_start == 1 and recs[0].line_end == 3
    assert recs[0].raw == "2023-01-01 00:00:00 ERROR x\n  at frame1\n  at frame2"
    assert recs[0].body == "ERROR x\n  at frame1\n  at frame2"


def test_assemble_two_records(tmp_path):
    recs = _assemble(tmp_path, "2023-01-01 00:00:00 a\n2023-01-01 00:00:01 b\n")
    assert len(recs) == 2
    assert [r.line_start for r in recs] == [1, 2]


def test_assemble_head_continuation(tmp_path):
    recs = _assemble(tmp_path, "cont-only\n")
    assert len(recs) == 1
    assert recs[0].timestamp is None
    assert recs[0].raw == "cont-only"


# ---------------------------------------------------------------------------
# consolidate


def _rec(src, line, ts):
    return ingest.LogRecord(
        record_id=None, source=src, line_start=line, line_end=line,
        timestamp=ts, raw=f"{src.path}:{line}", body="x",
    )


def _src(idx, name="f", lines=0):
    return ingest.SourceFile(path=f"{name}{idx}.log", index=idx,
                             byte_size=0, line_count=lines)


def test_consolidate_interleaves():
    a, b = _src(0), _src(1)
    t = [utc(2024, 1, 1, 0, 0, i) for i in range(3)]
    stream = consolidate([[ _rec(a, 1, t[0]), _rec(a, 2, t[2]) ], [ _rec(b, 1, t[1]) ]])
    assert [r.effective_ts for r in stream.records] == [t[0], t[1], t[2]]
    assert [r.record_id for r in stream.records] == [0, 1, 2]


def test_consolidate_tie_break_by_source_index():
    a, b = _src(0), _src(1)
    t = utc(2024, 1, 1)
    stream = consolidate([[_rec(a, 1, t)], [_rec(b, 1, t)]])
    assert [r.source.index for r in stream.records] == [0, 1]


def test_consolidate_inheritance_five_record_trace():
    # Hand trace: A has t1 then an untimestamped record u (inherits t1);
    # B has t2 with t1 < t2 < t3.  Expected order: A:t1, A:u, B:t2, A:t3.
    a, b = _src(0), _src(1)
    t1, t2, t3 = utc(2024, 1, 1, 0, 0, 1), utc(2024, 1, 1, 0, 0, 2), utc(2024, 1, 1, 0, 0, 3)
    u = _rec(a, 2, None)
    stream = consolidate([[_rec(a, 1, t1), u, _rec(a, 3, t3)], [_rec(b, 1, t2)]])
    assert u.effective_ts == t1 and u.ts_inherited
    order = [(r.source.index, r.line_start) for r in stream.records]
    assert order == [(0, 1), (0, 2), (1, 1), (0, 3)]


def test_consolidate_head_records_inherit_first_timestamp():
    a = _src(0)
    t = utc(2024, 1, 1)
    head = _rec(a, 1, None)
    stream = consolidate([[head, _rec(a, 2, t)]])
    assert head.effective_ts == t
    assert [r.line_start for r in stream.records] == [1, 2]


def test_consolidate_untimestamped_file_sorts_first():
    a, b = _src(0), _src(1)
    timed = _rec(a, 1, utc(2020, 1, 1))
    bare = _rec(b, 1, None)
    stream = consolidate([[timed], [bare]])
    assert stream.records[0] is bare
    assert bare.effective_ts is None and not bare.ts_inherited


def test_consolidate_counts_and_files():
    a, b = _src(0, lines=5), _src(1, lines=7)
    stream = consolidate([[_rec(a, 1, utc(2024, 1, 1))], [_rec(b, 1, None)]], files=[a, b])
    assert stream.total_lines == 12
    assert stream.files == [a, b]


# ---------------------------------------------------------------------------
# Properties: conservation, determinism, byte fidelity

_line = st.text(alphabet=string.ascii_letters + string.digits + " .:/-[]=", max_size=40)
_body = st.lists(_line, min_size=0, max_size=30)


@st.composite
def _log_text(draw):
    lines = []
    for text in draw(_body):
        if draw(st.booleans()):
            h = draw(st.integers(0, 23))
            m = draw(st.integers(0, 59))
            lines.append(f"2024-03-0{draw(st.integers(1, 9))} {h:02d}:{m:02d}:00 {text}")
        else:
            lines.append(text)
    trailing = draw(st.booleans())
    return "\n".join(lines) + ("\n" if trailing and lines else "")


@settings(max_examples=60, deadline=None)
@given(texts=st.lists(_log_text(), min_size=1, max_size=3))
@example(texts=["\n\n"])  # file of blank lines: conservation must still be exact
def test_property_conservation_and_determinism(tmp_path_factory, texts):
    tmp_path = tmp_path_factory.mktemp("ing")
    for i, text in enumerate(texts):
        (tmp_path / f"{i}.log").write_text(text)

    stream_a = ingest_paths([tmp_path], IngestConfig())
    stream_b = ingest_paths([tmp_path], IngestConfig())

    # every record exactly once
    per_file_counts = sum(
        len([r for r in stream_a.records if r.source.index == f.index])
        for f in stream_a.files
    )
    assert per_file_counts == len(stream_a.records)
    assert stream_a.total_lines == sum(f.line_count for f in stream_a.files)

    # byte conservation: raw fields reproduce each file exactly
    for f in stream_a.files:
        recs = [r for r in stream_a.records if r.source.index == f.index]
        recs.sort(key=lambda r: r.line_start)
        original = Path(f.path).read_text()
        rebuilt = "\n".join(r.raw for r in recs)
        if not recs:
            assert original == ""
        elif original.endswith("\n"):
            assert rebuilt + "\n" == original
        else:
            assert rebuilt == original

    # re-run is identical
    key_a = [(r.record_id, r.source.index, r.line_start, r.raw) for r in stream_a.records]
    key_b = [(r.record_id, r.source.index, r.line_start, r.raw) for r in stream_b.records]
    assert key_a == key_b


def test_record_order_total(tmp_path):
    (tmp_path / "a.log").write_text(
        "2024-01-01 00:00:02 late\n2024-01-01 00:00:01 early\ncont\n"
    )
    stream = ingest_paths([tmp_path], IngestConfig())
    keys = [
        (r.effective_ts is not None, r.effective_ts, r.source.index, r.line_start)
        for r in stream.records
    ]
    assert keys == sorted(keys)
