"""Shared test factories."""

from datetime import datetime, timedelta, timezone

import pytest

from logan.ingest import LogRecord, MasterStream, SourceFile


def make_stream(bodies, start=None, step_s=1.0, path="test.log"):
    """MasterStream with one record per body, timestamps step_s apart.

    A body of None produces an untimestamped record (effective_ts=None).
    """
    start = start or datetime(2024, 1, 1, tzinfo=timezone.utc)
    src = SourceFile(path=path, index=0, byte_size=0, line_count=len(bodies))
    records = []
    for i, body in enumerate(bodies):
        ts = None if body is None else start + timedelta(seconds=i * step_s)
        text = "" if body is None else body
        records.append(
            LogRecord(
                record_id=i, source=src, line_start=i + 1, line_end=i + 1,
                timestamp=ts, raw=text, body=text,
                effective_ts=ts, ts_inherited=False,
            )
        )
    return MasterStream(records=records, total_lines=len(bodies), files=[src])


@pytest.fixture()
def stream_factory():
    return make_stream
