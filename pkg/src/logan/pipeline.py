"""End-to-end analysis: paths in, ReportBundle out."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .broadcast import BroadcastStats, EnrichedRecord, emit_enriched, enrich_stream
from .causal import build_graph, build_matrix
from .config import RunConfig
from .ingest import MasterStream, ingest_paths
from .labeler import build_backend
from .reports import (
    ReportBundle,
    assemble_bundle,
    build_diagnosis,
    build_metadata,
    build_summary,
    build_temporal,
)
from .templatizer import TemplateStore


@dataclass
class AnalysisResult:
    bundle: ReportBundle
    stream: MasterStream
    store: TemplateStore
    enriched: list[EnrichedRecord]
    stats: BroadcastStats


def analyze_stream(
    stream: MasterStream,
    cfg: RunConfig,
    input_paths: list[str],
    warnings: list[str] | None = None,
    backend=None,
) -> AnalysisResult:
    warnings = warnings if warnings is not None else []
    store = TemplateStore(cfg=cfg.templatizer)
    backend = backend or build_backend(cfg.labeler)

    enriched, stats = enrich_stream(
        stream, store, backend, cfg=cfg.broadcast, warnings=warnings
    )

    summary = build_summary(enriched, store)
    diagnosis = build_diagnosis(
        enriched, cfg.reports.granularity, cfg.reports.window_cap
    )
    temporal = build_temporal(enriched, cfg.reports.temporal_bucket)

    matrix = build_matrix(enriched, cfg.causal.interval, warnings=warnings)
    node_info = {
        row.template_id: (row.representative_text, row.golden) for row in summary
    }
    graph = build_graph(
        matrix,
        max_lag=cfg.causal.max_lag,
        alpha=cfg.causal.alpha,
        node_info=node_info,
        difference=cfg.causal.difference,
        warnings=warnings,
    )

    metadata = build_metadata(
        input_paths=input_paths,
        files=stream.files,
        config_dict=cfg.to_dict(),
        config_digest=cfg.digest(),
        stats=stats,
        rows=len(summary),
    )
    bundle = assemble_bundle(summary, diagnosis, temporal, graph, metadata, warnings)

    if cfg.broadcast.emit_enriched:
        with open(cfg.broadcast.emit_enriched, "w", encoding="utf-8") as fp:
            emit_enriched(enriched, fp)

    return AnalysisResult(bundle, stream, store, enriched, stats)


def analyze_paths(
    paths: list[str | Path],
    cfg: RunConfig | None = None,
    backend=None,
) -> AnalysisResult:
    cfg = cfg or RunConfig()
    warnings: list[str] = []
    stream = ingest_paths(paths, cfg.ingest, warnings)
    return analyze_stream(
        stream, cfg, [str(p) for p in paths], warnings=warnings, backend=backend
    )
