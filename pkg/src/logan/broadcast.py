"""Label broadcasting: classify once per template, copy to all members.

The per-line variant exists as the benchmark baseline; production flow is
enrich_stream.  A label cache keyed by template token sequence lets
incremental runs over a shared store skip already-classified templates,
which is what produces the call-count plateau.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from .config import BroadcastConfig
from .ingest import LogRecord, MasterStream
from .labeler import Entity, LabelSet, RuleBackend, classify_batch, rule_based_entities
from .templatizer import TemplateStore, representative_set
from .util import rfc3339

FAILED_LABELS = ("information", ("other",))


@dataclass(slots=True)
class EnrichedRecord:
    record: LogRecord
    template_id: int
    labels: LabelSet  # shared broadcast copy, identical across the cluster
    per_line_entities: list[Entity] | None = None

    def entities(self) -> list[Entity]:
        return self.labels.entities if self.per_line_entities is None else self.per_line_entities


@dataclass
class BroadcastStats:
    lines_processed: int = 0
    templates_discovered: int = 0
    classifier_calls: dict[str, int] = field(default_factory=dict)
    wall_time: dict[str, float] = field(default_factory=dict)

    def calls(self, task: str) -> int:
        return self.classifier_calls.get(task, 0)


class LabelCache:
    """Carries classification results across incremental enrich calls."""

    def __init__(self):
        self.by_template: dict[int, LabelSet] = {}
        self.by_tokens: dict[tuple, LabelSet] = {}


def _classify_templates(
    backend,
    pending: list[tuple[int, tuple, str]],  # (template_id, token key, rep body)
    cache: LabelCache,
    stats: BroadcastStats,
    warnings: list[str],
) -> None:
    limit = max(1, backend.batch_limit)
    for i in range(0, len(pending), limit):
        chunk = pending[i : i + limit]
        bodies = [body for _, _, body in chunk]
        try:
            labels = classify_batch(backend, bodies, warnings=warnings)
            for task in backend.capabilities:
                stats.classifier_calls[task] = stats.calls(task) + len(bodies)
        except Exception as exc:  # ultimate failure: default labels, warn
            warnings.append(f"broadcast: classification failed, using defaults ({exc})")
            golden, faults = FAILED_LABELS
            labels = [
                LabelSet(golden, set(faults), [], getattr(backend, "backend_id", "?"))
                for _ in bodies
            ]
        for (template_id, key, _), label_set in zip(chunk, labels):
            cache.by_template[template_id] = label_set
            cache.by_tokens[key] = label_set


def enrich_stream(
    stream: MasterStream,
    store: TemplateStore,
    backend,
    cache: LabelCache | None = None,
    cfg: BroadcastConfig | None = None,
    warnings: list[str] | None = None,
) -> tuple[list[EnrichedRecord], BroadcastStats]:
    """Templatize (if needed), classify one representative per template,
    broadcast the LabelSet to every member record."""
    cfg = cfg or BroadcastConfig()
    cache = cache if cache is not None else LabelCache()
    warnings = warnings if warnings is not None else []
    stats = BroadcastStats(lines_processed=len(stream.records))

    t0 = time.perf_counter()
    templates_before = len(store.templates)
    bodies: dict[int, str] = {}
    for rec in stream.records:
        bodies[rec.record_id] = rec.body
        if rec.record_id not in store.assignment:
            store.process(rec.record_id, rec.body)
    stats.templates_discovered = len(store.templates) - templates_before
    t1 = time.perf_counter()

    reps = representative_set(store)
    pending: list[tuple[int, tuple, str]] = []
    for template in store.templates:
        if template.template_id in cache.by_template:
            continue
        key = tuple(template.tokens)
        if template.is_blank:
            cache.by_template[template.template_id] = LabelSet(
                "information", {"other"}, [], getattr(backend, "backend_id", "rule"),
            )
            continue
        cached = cache.by_tokens.get(key)
        if cached is not None:
            cache.by_template[template.template_id] = cached
            continue
        rep_id = reps[template.template_id]
        if rep_id not in bodies:
            # representative came from an earlier increment; fall back to
            # the template text (masked) rather than failing
            rep_body = template.text()
        else:
            rep_body = bodies[rep_id]
        pending.append((template.template_id, key, rep_body))
    _classify_templates(backend, pending, cache, stats, warnings)
    t2 = time.perf_counter()

    enriched = []
    for rec in stream.records:
        template_id = store.assignment[rec.record_id]
        labels = cache.by_template[template_id]
        per_line = rule_based_entities(rec.body) if cfg.per_line_entities else None
        enriched.append(EnrichedRecord(rec, template_id, labels, per_line))
    t3 = time.perf_counter()

    stats.wall_time = {
        "templatize": t1 - t0,
        "classify": t2 - t1,
        "broadcast": t3 - t2,
        "total": t3 - t0,
    }
    return enriched, stats


def enrich_per_line(
    stream: MasterStream,
    backend,
    store: TemplateStore | None = None,
    warnings: list[str] | None = None,
) -> tuple[list[EnrichedRecord], BroadcastStats]:
    """Baseline: classify every record body individually (no broadcast)."""
    warnings = warnings if warnings is not None else []
    stats = BroadcastStats(lines_processed=len(stream.records))

    t0 = time.perf_counter()
    enriched: list[EnrichedRecord] = []
    limit = max(1, backend.batch_limit)
    records = stream.records
    for i in range(0, len(records), limit):
        chunk = records[i : i + limit]
        bodies = [r.body for r in chunk]
        try:
            labels = classify_batch(backend, bodies, warnings=warnings)
            for task in backend.capabilities:
                stats.classifier_calls[task] = stats.calls(task) + len(bodies)
        except Exception as exc:
            warnings.append(f"per-line: classification failed, using defaults ({exc})")
            golden, faults = FAILED_LABELS
            labels = [
                LabelSet(golden, set(faults), [], getattr(backend, "backend_id", "?"))
                for _ in bodies
            ]
        for rec, label_set in zip(chunk, labels):
            template_id = store.assignment.get(rec.record_id, -1) if store else -1
            enriched.append(EnrichedRecord(rec, template_id, label_set))
    stats.wall_time = {"classify": time.perf_counter() - t0, "total": time.perf_counter() - t0}
    return enriched, stats


def emit_enriched(enriched: list[EnrichedRecord], fp) -> int:
    """Write enriched records as JSON lines; returns the row count."""
    n = 0
    for er in enriched:
        rec = er.record
        row = {
            "record_id": rec.record_id,
            "file": rec.source.path,
            "line_start": rec.line_start,
            "line_end": rec.line_end,
            "ts": rfc3339(rec.effective_ts),
            "template_id": er.template_id,
            "golden": er.labels.golden,
            "faults": sorted(er.labels.faults),
            "entities": [e.to_dict() for e in er.entities()],
        }
        fp.write(json.dumps(row, ensure_ascii=False) + "\n")
        n += 1
    return n
