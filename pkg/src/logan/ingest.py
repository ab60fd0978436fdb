"""Log dump ingestion.

Discovers plain-text log files, reassembles multi-line entries, parses
timestamps into UTC instants, and merges everything into one
chronologically ordered master stream with provenance (file, line span).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .config import IngestConfig


class IngestError(RuntimeError):
    """Fatal ingestion problem (unreadable root, archive input, ...)."""


# ---------------------------------------------------------------------------
# Domain types


@dataclass(slots=True)
class SourceFile:
    path: str
    index: int
    byte_size: int
    line_count: int


@dataclass(slots=True)
class LogRecord:
    record_id: int | None
    source: SourceFile
    line_start: int  # 1-based, inclusive
    line_end: int
    timestamp: datetime | None  # UTC instant parsed from the first line
    raw: str  # full text, continuation lines joined with "\n"
    body: str  # raw minus the recognized timestamp prefix
    effective_ts: datetime | None = None  # inherited when timestamp is None
    ts_inherited: bool = False


@dataclass
class MasterStream:
    records: list[LogRecord]
    total_lines: int
    files: list[SourceFile]
    warnings: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Timestamp parsing

# Closed table of zone abbreviations, minutes east of UTC.  A generic
# [A-Z]{2,4} zone pattern would swallow the start of words like ERROR,
# so only these exact names are recognized; anything else is left in the
# body and the time is taken as UTC.
_ZONE_MINUTES = {
    "UTC": 0, "GMT": 0, "Z": 0,
    "EST": -300, "EDT": -240, "CST": -360, "CDT": -300,
    "MST": -420, "MDT": -360, "PST": -480, "PDT": -420,
    "AKST": -540, "AKDT": -480, "HST": -600,
    "CET": 60, "CEST": 120, "EET": 120, "EEST": 180,
    "BST": 60, "JST": 540, "KST": 540,
    "AEST": 600, "AEDT": 660, "NZST": 720, "NZDT": 780,
}
_ZONE_ALT = "|".join(sorted(_ZONE_MINUTES, key=len, reverse=True))

_ISO_RE = re.compile(
    r"(\d{4})-(\d{2})-(\d{2})[T ](\d{2}):(\d{2}):(\d{2})(?:[.,](\d{1,9}))?"
    r"(?: ?(Z|[+-]\d{2}:?\d{2}|" + _ZONE_ALT + r")\b)?"
)
_YY_SLASH_RE = re.compile(r"(\d{2})/(\d{2})/(\d{2}) (\d{2}):(\d{2})(?::(\d{2}))?\b")
_MONTHS = "Jan|Feb|Mar|Apr|May|Jun|Jul|Aug|Sep|Oct|Nov|Dec"
_SYSLOG_RE = re.compile(r"(" + _MONTHS + r") {1,2}(\d{1,2}) (\d{2}):(\d{2}):(\d{2})\b")
_MONTH_NUM = {m: i + 1 for i, m in enumerate(_MONTHS.split("|"))}
_EPOCH_MS_RE = re.compile(r"^(\d{13})\b")

_SCAN_WINDOW = 64  # a timestamp must start within this many bytes


def _frac_to_micro(frac: str | None) -> int:
    if not frac:
        return 0
    ms = (frac + "000")[:3]  # millisecond resolution, truncate
    return int(ms) * 1000


def _zone_to_tz(zone: str | None) -> timezone:
    if not zone:
        return timezone.utc
    if zone in _ZONE_MINUTES:
        return timezone(timedelta(minutes=_ZONE_MINUTES[zone]))
    sign = -1 if zone[0] == "-" else 1
    digits = zone[1:].replace(":", "")
    return timezone(sign * timedelta(hours=int(digits[:2]), minutes=int(digits[2:])))


def _build_iso(m: re.Match) -> datetime:
    y, mo, d, h, mi, s = (int(m.group(i)) for i in range(1, 7))
    dt = datetime(y, mo, d, h, mi, s, _frac_to_micro(m.group(7)), tzinfo=_zone_to_tz(m.group(8)))
    return dt.astimezone(timezone.utc)


def _build_yy_slash(m: re.Match) -> datetime:
    yy, mo, d, h, mi = (int(m.group(i)) for i in range(1, 6))
    s = int(m.group(6) or 0)
    return datetime(2000 + yy, mo, d, h, mi, s, tzinfo=timezone.utc)


def _build_syslog(m: re.Match) -> datetime:
    # Syslog lines carry no year; 1900 keeps re-runs deterministic.
    return datetime(
        1900, _MONTH_NUM[m.group(1)], int(m.group(2)),
        int(m.group(3)), int(m.group(4)), int(m.group(5)),
        tzinfo=timezone.utc,
    )


def _build_epoch_ms(m: re.Match) -> datetime:
    return datetime.fromtimestamp(int(m.group(1)) / 1000.0, tz=timezone.utc)


_FORMATS = {
    "iso": (_ISO_RE, _build_iso),
    "yy-slash": (_YY_SLASH_RE, _build_yy_slash),
    "syslog": (_SYSLOG_RE, _build_syslog),
    "epoch-ms": (_EPOCH_MS_RE, _build_epoch_ms),
}
DEFAULT_FORMATS = ["iso", "yy-slash", "syslog", "epoch-ms"]


def build_format_table(names: list[str]) -> list[tuple[re.Pattern, object]]:
    table = []
    for name in names:
        if name == "default":
            table.extend(_FORMATS[n] for n in DEFAULT_FORMATS)
        elif name in _FORMATS:
            table.append(_FORMATS[name])
        else:
            raise IngestError(f"unknown timestamp format {name!r}; known: {sorted(_FORMATS)}")
    return table


def parse_timestamp(line: str, format_table: list) -> tuple[datetime, int] | None:
    """First matching pattern wins; returns (UTC instant, body offset).

    A match must start within the first 64 bytes and may not begin in the
    middle of a word.  Returns None when no pattern applies.
    """
    for pattern, build in format_table:
        for m in pattern.finditer(line):
            if m.start() >= _SCAN_WINDOW:
                break
            if m.start() > 0 and (line[m.start() - 1].isalnum() or line[m.start() - 1] == "."):
                continue
            try:
                ts = build(m)
            except (ValueError, OverflowError, OSError):
                continue  # e.g. month 13: shaped like a timestamp but not one
            end = m.end()
            while end < len(line) and line[end] in " \t":
                end += 1
            return ts, end
    return None


# ---------------------------------------------------------------------------
# Discovery

_ARCHIVE_SUFFIXES = {".zip", ".tar", ".gz", ".tgz", ".bz2", ".xz", ".7z", ".rar"}


def _is_archive(path: Path) -> bool:
    return path.suffix.lower() in _ARCHIVE_SUFFIXES


def _count_lines(data: bytes) -> int:
    if not data:
        return 0
    return data.count(b"\n") + (0 if data.endswith(b"\n") else 1)


def discover(
    root_paths: list[str | Path],
    include_globs: list[str] | None = None,
    exclude_globs: list[str] | None = None,
    warnings: list[str] | None = None,
) -> list[SourceFile]:
    """Enumerate candidate log files under the given roots.

    Ordering is lexicographic by path.  Binary files (null byte within the
    first 8 KiB) are skipped.  An unreadable root is fatal; an unreadable
    file is a warning.  Archives are rejected, not extracted.
    """
    include_globs = include_globs or ["**/*"]
    exclude_globs = exclude_globs or []
    if warnings is None:
        warnings = []

    candidates: set[Path] = set()
    for root in root_paths:
        root = Path(root)
        if not root.exists():
            raise IngestError(f"input path does not exist: {root}")
        if root.is_file():
            if _is_archive(root):
                raise IngestError(
                    f"archive input is not supported, extract it first: {root}"
                )
            candidates.add(root)
            continue
        try:
            included: set[Path] = set()
            for pattern in include_globs:
                included.update(p for p in root.glob(pattern) if p.is_file())
            for pattern in exclude_globs:
                included.difference_update(root.glob(pattern))
        except PermissionError as exc:
            raise IngestError(f"cannot read input path {root}: {exc}") from exc
        candidates.update(included)

    sources: list[SourceFile] = []
    for path in sorted(candidates, key=lambda p: str(p)):
        if _is_archive(path):
            warnings.append(f"ingest: archive not extracted, skipping {path}")
            continue
        try:
            with open(path, "rb") as fh:
                head = fh.read(8192)
                if b"\0" in head:
                    continue
                data = head + fh.read()
        except OSError as exc:
            warnings.append(f"ingest: cannot read {path}, skipping ({exc})")
            continue
        sources.append(
            SourceFile(
                path=str(path),
                index=len(sources),
                byte_size=len(data),
                line_count=_count_lines(data),
            )
        )
    return sources


# ---------------------------------------------------------------------------
# Record assembly


def assemble_records(source: SourceFile, format_table: list) -> list[LogRecord]:
    """Split one file into records, joining continuation lines.

    A line with a parseable timestamp starts a new record; a line without
    one extends the current record.  Leading continuation lines before any
    timestamp form a timestamp-less record.
    """
    data = Path(source.path).read_bytes()
    text = data.decode("utf-8", errors="replace")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # trailing newline, not an extra line

    records: list[LogRecord] = []
    for lineno, line in enumerate(lines, start=1):
        parsed = parse_timestamp(line, format_table)
        if parsed is None and records:
            current = records[-1]
            current.raw += "\n" + line
            current.body += "\n" + line
            current.line_end = lineno
            continue
        if parsed is None:
            ts, body = None, line
        else:
            ts, prefix_len = parsed
            body = line[prefix_len:]
        records.append(
            LogRecord(
                record_id=None,
                source=source,
                line_start=lineno,
                line_end=lineno,
                timestamp=ts,
                raw=line,
                body=body,
            )
        )
    return records


# ---------------------------------------------------------------------------
# Consolidation

_EPOCH0 = datetime(1, 1, 1, tzinfo=timezone.utc)


def consolidate(
    per_file_records: list[list[LogRecord]],
    files: list[SourceFile] | None = None,
) -> MasterStream:
    """Merge per-file record sequences into one ordered master stream.

    Sort key is (effective timestamp, source index, line_start).  Records
    without a timestamp inherit the nearest preceding timestamp in their
    file, or the file's first timestamp when none precedes.  Records from
    files with no timestamps at all keep effective_ts None and sort ahead
    of every timestamped record (by source index, then line).
    """
    for seq in per_file_records:
        first_ts = next((r.timestamp for r in seq if r.timestamp is not None), None)
        last_seen = None
        for rec in seq:
            if rec.timestamp is not None:
                last_seen = rec.timestamp
                rec.effective_ts = rec.timestamp
                rec.ts_inherited = False
            else:
                rec.effective_ts = last_seen if last_seen is not None else first_ts
                rec.ts_inherited = rec.effective_ts is not None

    merged = [rec for seq in per_file_records for rec in seq]
    merged.sort(
        key=lambda r: (
            0 if r.effective_ts is None else 1,
            r.effective_ts or _EPOCH0,
            r.source.index,
            r.line_start,
        )
    )
    for i, rec in enumerate(merged):
        rec.record_id = i

    if files is None:
        seen: dict[int, SourceFile] = {}
        for seq in per_file_records:
            for rec in seq:
                seen.setdefault(rec.source.index, rec.source)
        files = [seen[k] for k in sorted(seen)]

    return MasterStream(
        records=merged,
        total_lines=sum(f.line_count for f in files),
        files=files,
    )


def ingest_paths(
    root_paths: list[str | Path],
    cfg: IngestConfig | None = None,
    warnings: list[str] | None = None,
) -> MasterStream:
    """Full ingestion: discover, assemble each file, consolidate."""
    cfg = cfg or IngestConfig()
    own_warnings: list[str] = [] if warnings is None else warnings
    table = build_format_table(cfg.formats)
    files = discover(root_paths, cfg.include, cfg.exclude, own_warnings)
    per_file = [assemble_records(f, table) for f in files]
    stream = consolidate(per_file, files)
    stream.warnings = own_warnings
    return stream
