"""Desk-scale experiment harness.

Two reproducible experiments over a synthetic corpus with per-line ground
truth, plus a micro-benchmark of the templatizer kernels:

* run_rq1: cumulative classifier-call and time curves for the broadcast
  pipeline against the per-line baseline.  Classifier cost is simulated
  (calls x per_call_latency); measured wall time is reported separately so
  hardware noise never fails a comparison.
* run_rq2: record-wise agreement between the two pipelines, optionally with
  a variable-sensitive rule injected into the shared table so the paths
  diverge exactly on lines whose masked form hides the cue.
* run_kernels: throughput of the compiled and pure-Python match kernels.
"""

from __future__ import annotations

import csv
import json
import random
import time
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

from . import templatizer as _templatizer
from .broadcast import LabelCache, enrich_per_line, enrich_stream
from .ingest import LogRecord, MasterStream, SourceFile
from .labeler import DEFAULT_GOLDEN_TABLE, KeywordTables, RuleBackend, TemplatePureBackend
from .templatizer import TemplateStore

START = datetime(2024, 1, 1, tzinfo=timezone.utc)

# Verb phrases with a literal keyword cue, so the ground-truth signal
# survives masking and both pipelines agree on it.
_VERBS = [
    ("completed", "information"),
    ("failed on", "error"),
    ("timed out on", "latency"),
    ("hit queue full limit on", "saturation"),
    ("found unreachable peer on", "availability"),
]


@dataclass(frozen=True)
class Pattern:
    """Parameterized line shape; "{n}" renders as a fresh small integer."""

    text: str
    golden: str = "information"


@dataclass
class SyntheticCorpusSpec:
    template_pool: list[Pattern]
    n_lines: int
    seed: int = 0
    counts: list[int] | None = None  # exact lines per pattern; else uniform
    step_s: float = 1.0
    start: datetime = START

    def to_dict(self) -> dict:
        return {
            "templates": len(self.template_pool),
            "n_lines": self.n_lines,
            "seed": self.seed,
            "counts": self.counts,
            "step_s": self.step_s,
        }


def default_pool(n_templates: int) -> list[Pattern]:
    """Structurally distinct patterns: unique head token and varied length.

    The head token separates patterns in the parse tree and the length
    variants keep any one tree node well under the child capacity, so the
    pipeline discovers exactly n_templates templates.
    """
    pool = []
    for i in range(n_templates):
        verb, golden = _VERBS[i % len(_VERBS)]
        filler = " ".join("phase" for _ in range(i % 5))
        text = f"svc{i:04d} worker {{n}} {verb} job {{n}} {filler}".strip()
        pool.append(Pattern(text, golden))
    return pool


def sensitive_pattern(index: int, value: str = "500") -> Pattern:
    """Pattern whose only error cue is a maskable numeric variable value."""
    return Pattern(f"gw{index:04d} gateway reply status {value} for call {{n}}", "error")


def generate(spec: SyntheticCorpusSpec) -> tuple[MasterStream, list[int]]:
    """Render the corpus; returns the stream and per-line pattern indices."""
    rng = random.Random(spec.seed)
    pool = spec.template_pool
    if spec.counts is not None:
        if len(spec.counts) != len(pool):
            raise ValueError("counts must align with template_pool")
        if sum(spec.counts) != spec.n_lines:
            raise ValueError("counts must sum to n_lines")
        order = [i for i, c in enumerate(spec.counts) for _ in range(c)]
        rng.shuffle(order)
    else:
        # a first pass over the pool guarantees every pattern appears
        head = list(range(min(len(pool), spec.n_lines)))
        order = head + rng.choices(range(len(pool)), k=spec.n_lines - len(head))

    records = []
    byte_size = 0
    for i, pattern_idx in enumerate(order):
        parts = []
        for token in pool[pattern_idx].text.split(" "):
            # values below 500 so an injected "500" cue never fires by accident
            parts.append(str(rng.randrange(500)) if token == "{n}" else token)
        body = " ".join(parts)
        byte_size += len(body.encode()) + 1
        ts = spec.start + timedelta(seconds=i * spec.step_s)
        records.append(
            LogRecord(
                record_id=i, source=None, line_start=i + 1, line_end=i + 1,
                timestamp=ts, raw=body, body=body,
                effective_ts=ts, ts_inherited=False,
            )
        )
    src = SourceFile(path="synthetic.log", index=0, byte_size=byte_size, line_count=len(order))
    for rec in records:
        rec.source = src
    stream = MasterStream(records=records, total_lines=len(records), files=[src])
    return stream, order


# ---------------------------------------------------------------------------
# RQ1: call counts and time curves


@dataclass
class Rq1Point:
    lines: int
    templates: int
    lb_calls: dict[str, int]
    pl_calls: dict[str, int]
    lb_measured_s: float
    pl_measured_s: float


@dataclass
class Rq1Result:
    per_call_latency_s: float
    headline_task: str
    spec: dict
    points: list[Rq1Point] = field(default_factory=list)

    def lb_sim_s(self, point: Rq1Point) -> float:
        return point.lb_calls.get(self.headline_task, 0) * self.per_call_latency_s + point.lb_measured_s

    def pl_sim_s(self, point: Rq1Point) -> float:
        return point.pl_calls.get(self.headline_task, 0) * self.per_call_latency_s + point.pl_measured_s

    def discoveries(self) -> list[int]:
        """New templates per increment."""
        seen = [p.templates for p in self.points]
        return [b - a for a, b in zip([0] + seen, seen)]

    def to_dict(self) -> dict:
        return {
            "per_call_latency_s": self.per_call_latency_s,
            "headline_task": self.headline_task,
            "spec": self.spec,
            "points": [
                {
                    "lines": p.lines,
                    "templates": p.templates,
                    "lb_calls": dict(sorted(p.lb_calls.items())),
                    "pl_calls": dict(sorted(p.pl_calls.items())),
                    "lb_sim_s": self.lb_sim_s(p),
                    "pl_sim_s": self.pl_sim_s(p),
                    "lb_measured_s": p.lb_measured_s,
                    "pl_measured_s": p.pl_measured_s,
                }
                for p in self.points
            ],
        }

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "rq1.json").write_text(
            json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        with open(out / "rq1.csv", "w", newline="", encoding="utf-8") as fp:
            w = csv.writer(fp)
            w.writerow([
                "lines", "templates", "lb_calls", "pl_calls",
                "lb_sim_s", "pl_sim_s", "lb_measured_s", "pl_measured_s",
            ])
            for p in self.points:
                w.writerow([
                    p.lines, p.templates,
                    p.lb_calls.get(self.headline_task, 0),
                    p.pl_calls.get(self.headline_task, 0),
                    f"{self.lb_sim_s(p):.6f}", f"{self.pl_sim_s(p):.6f}",
                    f"{p.lb_measured_s:.6f}", f"{p.pl_measured_s:.6f}",
                ])


def run_rq1(
    spec: SyntheticCorpusSpec,
    per_call_latency: float = 0.02,
    increments: list[int] | None = None,
    backend=None,
) -> Rq1Result:
    """Cumulative curves for broadcast vs per-line enrichment.

    Both pipelines consume the corpus in the given increments; the broadcast
    side keeps its template store and label cache across increments, so the
    call curve plateaus once discovery stops.
    """
    if increments is None:
        increments = list(range(10_000, spec.n_lines, 10_000)) + [spec.n_lines]
    if increments != sorted(set(increments)) or increments[-1] != spec.n_lines:
        raise ValueError("increments must ascend and end at n_lines")

    stream, _ = generate(spec)
    backend = backend or RuleBackend()
    result = Rq1Result(per_call_latency, "gsc", spec.to_dict())

    store = TemplateStore()
    cache = LabelCache()
    lb_calls: dict[str, int] = {}
    pl_calls: dict[str, int] = {}
    lb_measured = pl_measured = 0.0
    prev = 0
    for upto in increments:
        chunk = stream.records[prev:upto]
        sub = MasterStream(records=chunk, total_lines=len(chunk), files=stream.files)

        _, lb_stats = enrich_stream(sub, store, backend, cache=cache)
        for task, n in lb_stats.classifier_calls.items():
            lb_calls[task] = lb_calls.get(task, 0) + n
        lb_measured += lb_stats.wall_time["total"]

        _, pl_stats = enrich_per_line(sub, backend)
        for task, n in pl_stats.classifier_calls.items():
            pl_calls[task] = pl_calls.get(task, 0) + n
        pl_measured += pl_stats.wall_time["total"]

        result.points.append(
            Rq1Point(
                lines=upto,
                templates=sum(1 for t in store.templates if not t.is_blank),
                lb_calls=dict(lb_calls),
                pl_calls=dict(pl_calls),
                lb_measured_s=lb_measured,
                pl_measured_s=pl_measured,
            )
        )
        prev = upto
    return result


# ---------------------------------------------------------------------------
# RQ2: agreement between the two pipelines


@dataclass
class AgreementReport:
    lines: int
    identical: int
    differing: int
    both_wrong: int
    only_lb_correct: int
    only_per_line_correct: int

    def __post_init__(self):
        if self.identical + self.differing != self.lines:
            raise ValueError("identical + differing must equal lines")
        parts = self.both_wrong + self.only_lb_correct + self.only_per_line_correct
        if parts != self.differing:
            raise ValueError("categories must partition differing lines")

    def to_dict(self) -> dict:
        return {
            "lines": self.lines,
            "identical": self.identical,
            "differing": self.differing,
            "both_wrong": self.both_wrong,
            "only_lb_correct": self.only_lb_correct,
            "only_per_line_correct": self.only_per_line_correct,
        }

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "rq2.json").write_text(
            json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        with open(out / "rq2.csv", "w", newline="", encoding="utf-8") as fp:
            w = csv.writer(fp)
            rows = self.to_dict()
            w.writerow(rows.keys())
            w.writerow(rows.values())


def sensitive_tables(keyword: str, signal: str = "error") -> KeywordTables:
    """Default golden table plus one variable-sensitive cue."""
    golden = [
        (sig, list(kws) + ([keyword] if sig == signal else []))
        for sig, kws in DEFAULT_GOLDEN_TABLE
    ]
    return KeywordTables(golden=golden)


def run_rq2(
    spec: SyntheticCorpusSpec,
    backend_lb=None,
    backend_per_line=None,
    sensitive_keyword: str | None = None,
    sensitive_signal: str = "error",
) -> AgreementReport:
    """Record-wise golden-signal agreement of broadcast vs per-line output.

    Both backends share one rule table.  A sensitive keyword makes the
    paths differ exactly on lines where the cue sits in a masked variable:
    the per-line path reads the raw value, the broadcast path only ever
    sees the template shape.
    """
    tables = sensitive_tables(sensitive_keyword, sensitive_signal) if sensitive_keyword else None
    inner = RuleBackend(tables)
    backend_per_line = backend_per_line or inner
    backend_lb = backend_lb or TemplatePureBackend(inner)

    stream, truth_idx = generate(spec)
    store = TemplateStore()
    lb_enriched, _ = enrich_stream(stream, store, backend_lb)
    pl_enriched, _ = enrich_per_line(stream, backend_per_line, store=store)

    identical = differing = both_wrong = only_lb = only_pl = 0
    for lb, pl, idx in zip(lb_enriched, pl_enriched, truth_idx):
        truth = spec.template_pool[idx].golden
        if lb.labels.golden == pl.labels.golden:
            identical += 1
        else:
            differing += 1
            lb_ok = lb.labels.golden == truth
            pl_ok = pl.labels.golden == truth
            if lb_ok and not pl_ok:
                only_lb += 1
            elif pl_ok and not lb_ok:
                only_pl += 1
            else:
                both_wrong += 1
    return AgreementReport(
        lines=len(truth_idx),
        identical=identical,
        differing=differing,
        both_wrong=both_wrong,
        only_lb_correct=only_lb,
        only_per_line_correct=only_pl,
    )


# ---------------------------------------------------------------------------
# Kernel micro-benchmark


def run_kernels(n_lines: int = 20_000, n_templates: int = 100, seed: int = 0,
                repeats: int = 3) -> dict:
    """Templatize the same corpus under each available match kernel."""
    spec = SyntheticCorpusSpec(default_pool(n_templates), n_lines, seed=seed)
    stream, _ = generate(spec)
    bodies = [(r.record_id, r.body) for r in stream.records]

    from .templatizer import _tree_py

    kernels = [_tree_py]
    try:
        from .templatizer import _tree_cy

        kernels.append(_tree_cy)
    except ImportError:
        pass

    results = []
    active = _templatizer._kernel
    try:
        for mod in kernels:
            _templatizer._kernel = mod
            best = float("inf")
            for _ in range(repeats):
                store = TemplateStore()
                t0 = time.perf_counter()
                for record_id, body in bodies:
                    store.process(record_id, body)
                best = min(best, time.perf_counter() - t0)
            results.append({
                "kernel": mod.NAME,
                "seconds": best,
                "lines_per_s": n_lines / best,
                "templates": sum(1 for t in store.templates if not t.is_blank),
            })
    finally:
        _templatizer._kernel = active

    out = {"n_lines": n_lines, "n_templates": n_templates, "results": results}
    if len(results) == 2:
        out["speedup"] = results[0]["seconds"] / results[1]["seconds"]
    return out
