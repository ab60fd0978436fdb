"""Report generation: summary, diagnosis windows, temporal trend, bundle.

All builders are pure functions over finalized enrichment.  The bundle
serializes to canonical JSON (sorted keys, RFC-3339 instants, integer
second durations) and deliberately carries no wall-clock data, so a
re-run over identical input and config is byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .broadcast import BroadcastStats, EnrichedRecord
from .causal import PROBLEMATIC_SIGNALS, CausalGraph
from .labeler import GOLDEN_SIGNALS, Entity
from .templatizer import TemplateStore
from .util import canonical_json, digest, rfc3339

SCHEMA_VERSION = "1"

# Stable palette ids shipped in the bundle so every renderer agrees.
PALETTE = {
    "signals": {
        "latency": "#f59e0b",
        "traffic": "#3b82f6",
        "error": "#ef4444",
        "saturation": "#8b5cf6",
        "availability": "#f97316",
        "information": "#6b7280",
    },
    "entities": {
        "DateTime": "#0ea5e9",
        "Level": "#e11d48",
        "ProcessID": "#10b981",
        "ErrorCode": "#dc2626",
        "URL": "#2563eb",
        "Cause": "#b91c1c",
        "Symptom": "#c2410c",
        "NVPair": "#7c3aed",
        "FileOrDir": "#047857",
    },
}


class BundleError(RuntimeError):
    """Bundle assembly failed (cross-reference violation)."""


def is_relevant(er: EnrichedRecord) -> bool:
    """A record that makes its window worth showing."""
    return er.labels.golden in PROBLEMATIC_SIGNALS or er.labels.faults != {"other"}


# ---------------------------------------------------------------------------
# Summary


@dataclass(slots=True)
class SummaryRow:
    template_id: int
    representative_text: str
    golden: str
    faults: set[str]
    entities: list[Entity]
    frequency: int
    first_seen: datetime | None
    last_seen: datetime | None

    def to_dict(self) -> dict:
        return {
            "template_id": self.template_id,
            "text": self.representative_text,
            "golden": self.golden,
            "faults": sorted(self.faults),
            "entities": [e.to_dict() for e in self.entities],
            "frequency": self.frequency,
            "first_seen": rfc3339(self.first_seen),
            "last_seen": rfc3339(self.last_seen),
        }


def build_summary(enriched: list[EnrichedRecord], store: TemplateStore) -> list[SummaryRow]:
    """One row per non-blank template, rarest first.

    Rare events are the interesting ones, so rows sort by ascending
    frequency (ties by template id).
    """
    members: dict[int, list[EnrichedRecord]] = {}
    for er in enriched:
        members.setdefault(er.template_id, []).append(er)

    bodies = {er.record.record_id: er.record.body for er in enriched}
    rows = []
    for template in store.templates:
        group = members.get(template.template_id)
        if group is None or template.is_blank:
            continue
        stamps = [er.record.effective_ts for er in group if er.record.effective_ts is not None]
        labels = group[0].labels
        rows.append(
            SummaryRow(
                template_id=template.template_id,
                representative_text=bodies.get(
                    template.representative_record_id, template.text()
                ),
                golden=labels.golden,
                faults=set(labels.faults),
                entities=list(labels.entities),
                frequency=len(group),
                first_seen=min(stamps) if stamps else None,
                last_seen=max(stamps) if stamps else None,
            )
        )
    rows.sort(key=lambda r: (r.frequency, r.template_id))
    return rows


def reduction_ratio(n_rows: int, total_lines: int) -> float:
    if total_lines <= 0:
        return 0.0
    return 1.0 - n_rows / total_lines


# ---------------------------------------------------------------------------
# Diagnosis windows


@dataclass
class LogWindow:
    window_start: datetime
    granularity: float
    records: list[EnrichedRecord]
    trigger_signals: set[str]
    total_records: int
    truncated: bool

    def to_dict(self) -> dict:
        return {
            "window_start": rfc3339(self.window_start),
            "granularity": int(self.granularity),
            "trigger_signals": sorted(self.trigger_signals),
            "total_records": self.total_records,
            "truncated": self.truncated,
            "records": [
                {
                    "record_id": er.record.record_id,
                    "file": er.record.source.path,
                    "line_start": er.record.line_start,
                    "line_end": er.record.line_end,
                    "ts": rfc3339(er.record.effective_ts),
                    "template_id": er.template_id,
                    "golden": er.labels.golden,
                    "faults": sorted(er.labels.faults),
                    "text": er.record.raw,
                }
                for er in self.records
            ],
        }


def build_diagnosis(
    enriched: list[EnrichedRecord],
    granularity: float = 60.0,
    window_cap: int = 500,
) -> list[LogWindow]:
    """Aligned windows that contain at least one erroneous/faulty record.

    Windows keep all their records (context included) up to window_cap,
    with an overflow marker beyond that.
    """
    grouped: dict[int, list[EnrichedRecord]] = {}
    for er in enriched:
        ts = er.record.effective_ts
        if ts is None:
            continue  # no instant, no window
        slot = math.floor(ts.timestamp() / granularity)
        grouped.setdefault(slot, []).append(er)

    windows = []
    for slot in sorted(grouped):
        group = sorted(grouped[slot], key=lambda er: er.record.record_id)
        if not any(is_relevant(er) for er in group):
            continue
        windows.append(
            LogWindow(
                window_start=datetime.fromtimestamp(slot * granularity, tz=timezone.utc),
                granularity=granularity,
                records=group[:window_cap],
                trigger_signals={er.labels.golden for er in group},
                total_records=len(group),
                truncated=len(group) > window_cap,
            )
        )
    return windows


# ---------------------------------------------------------------------------
# Temporal trend


@dataclass(slots=True)
class TemporalBucket:
    bucket_start: datetime
    counts: dict[str, int]

    def to_dict(self) -> dict:
        return {"bucket_start": rfc3339(self.bucket_start), "counts": dict(self.counts)}


def build_temporal(enriched: list[EnrichedRecord], bucket: float = 3600.0) -> list[TemporalBucket]:
    """Signal counts per contiguous bucket, gaps zero-filled."""
    stamped = [er for er in enriched if er.record.effective_ts is not None]
    if not stamped:
        return []
    slots = [math.floor(er.record.effective_ts.timestamp() / bucket) for er in stamped]
    first, last = min(slots), max(slots)
    buckets = {
        slot: TemporalBucket(
            bucket_start=datetime.fromtimestamp(slot * bucket, tz=timezone.utc),
            counts={signal: 0 for signal in GOLDEN_SIGNALS},
        )
        for slot in range(first, last + 1)
    }
    for er, slot in zip(stamped, slots):
        buckets[slot].counts[er.labels.golden] += 1
    return [buckets[slot] for slot in range(first, last + 1)]


# ---------------------------------------------------------------------------
# Bundle


@dataclass
class ReportBundle:
    meta: dict
    summary: list[SummaryRow]
    diagnosis: list[LogWindow]
    temporal: list[TemporalBucket]
    causal: CausalGraph
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "meta": self.meta,
            "summary": [r.to_dict() for r in self.summary],
            "diagnosis": [w.to_dict() for w in self.diagnosis],
            "temporal": [b.to_dict() for b in self.temporal],
            "causal": self.causal.to_dict(),
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict()) + "\n"


def build_metadata(
    input_paths: list[str],
    files: list,
    config_dict: dict,
    config_digest: str,
    stats: BroadcastStats,
    rows: int,
) -> dict:
    """Deterministic bundle metadata; wall-clock values intentionally absent."""
    run_id = digest(
        {
            "inputs": list(input_paths),
            "config": config_digest,
            "files": [[f.path, f.byte_size, f.line_count] for f in files],
        }
    )
    return {
        "run_id": run_id,
        "schema_version": SCHEMA_VERSION,
        "inputs": list(input_paths),
        "config_digest": config_digest,
        "config": config_dict,
        "counters": {
            "lines_processed": stats.lines_processed,
            "templates_discovered": stats.templates_discovered,
            "classifier_calls": dict(sorted(stats.classifier_calls.items())),
            "summary_rows": rows,
            "reduction": reduction_ratio(rows, stats.lines_processed),
        },
        "palette": PALETTE,
    }


def assemble_bundle(
    summary: list[SummaryRow],
    diagnosis: list[LogWindow],
    temporal: list[TemporalBucket],
    causal: CausalGraph,
    metadata: dict,
    warnings: list[str] | None = None,
) -> ReportBundle:
    """Cross-check component references and wrap them into one bundle."""
    warnings = list(warnings or [])
    summary_ids = {row.template_id for row in summary}
    node_ids = {node["template_id"] for node in causal.nodes}
    for edge in causal.edges:
        for endpoint in (edge.from_template, edge.to_template):
            if endpoint not in node_ids:
                raise BundleError(f"causal edge references unknown node {endpoint}")
            if endpoint not in summary_ids:
                raise BundleError(f"causal node {endpoint} missing from summary")
    for window in diagnosis:
        for er in window.records:
            if not er.record.body.strip():
                continue  # blank lines ride along as context, never as rows
            if er.template_id not in summary_ids:
                raise BundleError(
                    f"diagnosis record {er.record.record_id} references "
                    f"unknown template {er.template_id}"
                )
    if not summary:
        warnings.append("reports: empty corpus, all sections empty")
    return ReportBundle(
        meta=metadata,
        summary=summary,
        diagnosis=diagnosis,
        temporal=temporal,
        causal=causal,
        warnings=warnings,
    )


def parse_bundle(text: str) -> dict:
    """Inverse of ReportBundle.to_json at the JSON level, with key checks."""
    import json

    data = json.loads(text)
    expected = {"meta", "summary", "diagnosis", "temporal", "causal", "warnings"}
    if set(data) != expected:
        raise BundleError(f"bundle keys {sorted(data)} != {sorted(expected)}")
    return data
