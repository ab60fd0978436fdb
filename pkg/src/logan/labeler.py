"""Line classification: golden signals, fault categories, named entities.

Backends implement one interface; the rule-based backend is a pure
function over keyword tables and regex extractors, the remote backend
speaks a small HTTP protocol.  Also hosts the macro-recall evaluation
metric.
"""

from __future__ import annotations

import json
import re
import urllib.error
import urllib.request
from dataclasses import dataclass, field

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .config import LabelerConfig

GOLDEN_SIGNALS = ("latency", "traffic", "error", "saturation", "availability", "information")
FAULT_CATEGORIES = ("memory", "network", "authentication", "io", "device", "application", "other")
TASKS = ("gsc", "fcp", "ner")

# Priority order is fixed (first match wins); keyword lists are data and
# fully overridable.  Keywords match case-insensitively at word start and
# are open-ended, so "fail" also hits "failed" and "saturat" hits
# "saturation".
DEFAULT_GOLDEN_TABLE: list[tuple[str, list[str]]] = [
    ("error", ["error", "exception", "fatal", "fail", "failure", "broken"]),
    ("availability", ["unavailable", "not found", "does not exist", "unreachable",
                      "no route", "refused", "down"]),
    ("saturation", ["full", "exceeded", "limit reached", "out of memory", "saturat", "quota"]),
    ("latency", ["timed out", "timeout", "slow", "latency", "took too long"]),
    ("traffic", ["requests per", "throughput", "rate limit", "too many requests"]),
]

DEFAULT_FAULT_TABLE: dict[str, list[str]] = {
    "memory": ["oom", "heap", "alloc"],
    "network": ["connection", "socket", "dns", "tcp"],
    "authentication": ["auth", "login", "credential", "token", "denied"],
    "io": ["disk", "file", "read", "write", "io"],
    "device": ["device", "hardware", "driver"],
    "application": ["exception", "nullpointer", "stack trace"],
}


def _compile_keywords(keywords: list[str]) -> re.Pattern:
    alts = "|".join(re.escape(k) for k in sorted(keywords, key=len, reverse=True))
    return re.compile(r"\b(?:" + alts + ")", re.IGNORECASE)


class KeywordTables:
    """Compiled golden/fault keyword tables."""

    def __init__(
        self,
        golden: list[tuple[str, list[str]]] | None = None,
        faults: dict[str, list[str]] | None = None,
    ):
        self.golden_raw = golden if golden is not None else DEFAULT_GOLDEN_TABLE
        self.fault_raw = faults if faults is not None else DEFAULT_FAULT_TABLE
        self._golden = [(sig, _compile_keywords(kws)) for sig, kws in self.golden_raw if kws]
        self._faults = {cat: _compile_keywords(kws) for cat, kws in self.fault_raw.items() if kws}

    def golden_of(self, text: str) -> str:
        for signal, pattern in self._golden:
            if pattern.search(text):
                return signal
        return "information"

    def faults_of(self, text: str) -> set[str]:
        hits = {cat for cat, pattern in self._faults.items() if pattern.search(text)}
        return hits or {"other"}


_GOLDEN_ORDER = [sig for sig, _ in DEFAULT_GOLDEN_TABLE]


def load_keyword_tables(path: str) -> KeywordTables:
    """Load table overrides from a JSON or TOML file.

    Shape: {"golden": {signal: [keywords]}, "faults": {category: [keywords]}}.
    Signals keep the fixed priority order; unlisted entries keep defaults.
    """
    raw = open(path, "rb").read()
    data = tomllib.loads(raw.decode()) if not raw.lstrip().startswith(b"{") else json.loads(raw)
    golden_over = data.get("golden", {})
    for sig in golden_over:
        if sig not in GOLDEN_SIGNALS:
            raise ValueError(f"unknown golden signal in keyword file: {sig!r}")
    fault_over = data.get("faults", {})
    for cat in fault_over:
        if cat not in FAULT_CATEGORIES:
            raise ValueError(f"unknown fault category in keyword file: {cat!r}")
    golden = [(sig, golden_over.get(sig, dict(DEFAULT_GOLDEN_TABLE).get(sig, [])))
              for sig in _GOLDEN_ORDER]
    faults = {cat: fault_over.get(cat, DEFAULT_FAULT_TABLE.get(cat, []))
              for cat in FAULT_CATEGORIES if cat != "other"}
    return KeywordTables(golden, faults)


# ---------------------------------------------------------------------------
# Entities


ENTITY_TYPES = ("DateTime", "Level", "ProcessID", "ErrorCode", "URL",
                "Cause", "Symptom", "NVPair", "FileOrDir")


@dataclass(slots=True)
class Entity:
    entity_type: str
    start: int
    end: int
    text: str

    def to_dict(self) -> dict:
        return {"type": self.entity_type, "start": self.start, "end": self.end,
                "text": self.text}


_DT_PATTERNS = [
    re.compile(r"\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}(?::\d{2})?(?:[.,]\d{1,9})?"
               r"(?:Z|[+-]\d{2}:?\d{2}| ?[A-Z]{2,4}(?=\s|$))?"),
    re.compile(r"\d{2}/\d{2}/\d{2} \d{2}:\d{2}(?::\d{2})?"),
    re.compile(r"(?:Jan|Feb|Mar|Apr|May|Jun|Jul|Aug|Sep|Oct|Nov|Dec) {1,2}\d{1,2}"
               r" \d{2}:\d{2}:\d{2}"),
]
_LEVEL_RE = re.compile(
    r"\b(TRACE|DEBUG|INFO|NOTICE|WARNING|WARN|ERROR|ERR|SEVERE|CRITICAL|FATAL)\b"
)
_PID_RE = re.compile(
    r"(?:\bpid\b|\btid\b|\bprocess ?id\b|\bthread ?id\b)\s*[:=\-#]*\s*(\d+)", re.IGNORECASE
)
_ERRCODE_RE = re.compile(
    r"(?:\berror ?code\b|\berrno\b|\bstatus(?: code)?\b|\bcode\b)\s*[:=\-#]*\s*(\d+)",
    re.IGNORECASE,
)
_URL_RE = re.compile(r"https?://[^\s\]\)\"'>,]+")
_NVPAIR_RE = re.compile(r"[A-Za-z_][\w.\-]*=\S+")
_PATH_RE = re.compile(r"(?:[A-Za-z]:)?(?:/[\w.\-+%~]+)+/?")
_CAUSE_CUE_RE = re.compile(r"\b(?:caused by|due to)\s+", re.IGNORECASE)
_SYMPTOM_CUE_RE = re.compile(r"\b(?:unable to|failed to)\b", re.IGNORECASE)
_FAILURE_NOUN_RE = re.compile(r"\b[A-Za-z][\w\-]* failure\b", re.IGNORECASE)
_CLAUSE_STOP = {"from", "for", "at", "in", "on", "to", "with", "by", "via",
                "after", "before", "because", "due", "while", "when"}
_TRAILING_PUNCT = ".,;:!?"


_WORD_RE = re.compile(r"\S+")


def _clause_end(text: str, start: int) -> int:
    """End offset of a clause: stop at punctuation or a linking word."""
    pos = start
    end = start
    while pos < len(text):
        m = _WORD_RE.search(text, pos)
        if m is None:
            break
        word = m.group(0)
        if word.lower().strip(_TRAILING_PUNCT) in _CLAUSE_STOP:
            break
        end = m.end() - (len(word) - len(word.rstrip(_TRAILING_PUNCT)))
        pos = m.end()
        if word != word.rstrip(_TRAILING_PUNCT):
            break  # sentence punctuation ends the clause
    return end


def rule_based_entities(text: str) -> list[Entity]:
    """Regex extraction with leftmost-longest overlap resolution."""
    candidates: list[Entity] = []

    def add(entity_type: str, start: int, end: int):
        while end > start and text[end - 1] in _TRAILING_PUNCT:
            end -= 1
        if end > start:
            candidates.append(Entity(entity_type, start, end, text[start:end]))

    for pattern in _DT_PATTERNS:
        for m in pattern.finditer(text):
            add("DateTime", m.start(), m.end())
    for m in _LEVEL_RE.finditer(text):
        add("Level", m.start(1), m.end(1))
    for m in _PID_RE.finditer(text):
        add("ProcessID", m.start(1), m.end(1))
    for m in _ERRCODE_RE.finditer(text):
        add("ErrorCode", m.start(1), m.end(1))
    for m in _URL_RE.finditer(text):
        add("URL", m.start(), m.end())
    for m in _NVPAIR_RE.finditer(text):
        add("NVPair", m.start(), m.end())
    for m in _PATH_RE.finditer(text):
        add("FileOrDir", m.start(), m.end())
    # symptom spans include their cue ("Unable to fetch data"); cause cues
    # introduce the cause, so the span starts after the cue
    for m in _SYMPTOM_CUE_RE.finditer(text):
        add("Symptom", m.start(), _clause_end(text, m.end()))
    for m in _CAUSE_CUE_RE.finditer(text):
        add("Cause", m.end(), _clause_end(text, m.end()))
    for m in _FAILURE_NOUN_RE.finditer(text):
        add("Cause", m.start(), m.end())

    order = {t: i for i, t in enumerate(ENTITY_TYPES)}
    candidates.sort(key=lambda e: (e.start, -(e.end - e.start), order[e.entity_type]))
    kept: list[Entity] = []
    last_end = -1
    for cand in candidates:
        if cand.start >= last_end:
            kept.append(cand)
            last_end = cand.end
    return kept


# ---------------------------------------------------------------------------
# Label sets and backends


@dataclass(slots=True)
class LabelSet:
    golden: str
    faults: set[str]
    entities: list[Entity]
    backend_id: str
    confidence: float | None = None  # carried, unused by reports

    def to_dict(self) -> dict:
        return {
            "golden": self.golden,
            "faults": sorted(self.faults),
            "entities": [e.to_dict() for e in self.entities],
            "backend_id": self.backend_id,
        }


class RemoteError(RuntimeError):
    """Remote classifier transport failure after the given attempts."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class RuleBackend:
    """Deterministic keyword/regex classifier; serves all three tasks."""

    backend_id = "rule"
    capabilities = frozenset(TASKS)
    batch_limit = 100_000

    def __init__(self, tables: KeywordTables | None = None):
        self.tables = tables or KeywordTables()

    def run_task(self, task: str, lines: list[str]) -> list:
        if task == "gsc":
            return [self.tables.golden_of(line) for line in lines]
        if task == "fcp":
            return [self.tables.faults_of(line) for line in lines]
        if task == "ner":
            return [rule_based_entities(line) for line in lines]
        raise ValueError(f"unknown task {task!r}")


def rule_based_golden(text: str, tables: KeywordTables | None = None) -> str:
    return (tables or _DEFAULT_TABLES).golden_of(text)


def rule_based_faults(text: str, tables: KeywordTables | None = None) -> set[str]:
    return (tables or _DEFAULT_TABLES).faults_of(text)


_DEFAULT_TABLES = KeywordTables()


class RemoteBackend:
    """HTTP classifier: POST /classify {task, lines} -> {labels: [...]}."""

    capabilities = frozenset(TASKS)
    batch_limit = 512

    def __init__(self, endpoint: str, timeout_ms: int = 5000, retries: int = 2):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout_ms / 1000.0
        self.retries = retries
        self.backend_id = f"remote:{self.endpoint}"

    def run_task(self, task: str, lines: list[str]) -> list:
        payload = json.dumps({"task": task, "lines": lines}).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint + "/classify", data=payload,
            headers={"Content-Type": "application/json"}, method="POST",
        )
        attempts = 0
        last_error: Exception | None = None
        while attempts <= self.retries:
            attempts += 1
            try:
                with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                    body = json.loads(resp.read().decode("utf-8"))
                return self._parse(task, lines, body)
            except (urllib.error.URLError, OSError, json.JSONDecodeError, ValueError) as exc:
                last_error = exc
        raise RemoteError(
            f"remote classifier {task} failed after {attempts} attempts: {last_error}",
            attempts,
        )

    def _parse(self, task: str, lines: list[str], body: dict) -> list:
        labels = body["labels"]
        if len(labels) != len(lines):
            raise ValueError(f"remote returned {len(labels)} labels for {len(lines)} lines")
        if task == "gsc":
            bad = [l for l in labels if l not in GOLDEN_SIGNALS]
            if bad:
                raise ValueError(f"remote returned unknown golden signals: {bad[:3]}")
            return list(labels)
        if task == "fcp":
            out = []
            for cats in labels:
                cats = {c for c in cats if c in FAULT_CATEGORIES}
                out.append(cats or {"other"})
            return out
        out = []
        for line, ents in zip(lines, labels):
            parsed = []
            for e in ents:
                ent = Entity(e["type"], int(e["start"]), int(e["end"]), e["text"])
                if (ent.entity_type in ENTITY_TYPES
                        and 0 <= ent.start <= ent.end <= len(line)
                        and line[ent.start:ent.end] == ent.text):
                    parsed.append(ent)
            out.append(parsed)
        return out


class TemplatePureBackend:
    """Wrapper that hides variable values from the inner backend.

    Lines are masked to their token sequence before classification, so the
    output depends only on the template shape.  Under such a backend,
    broadcast and per-line enrichment provably agree on mask-identical
    clusters.
    """

    def __init__(self, inner=None, mask=None):
        from .templatizer import compile_masks, tokenize

        self.inner = inner or RuleBackend()
        self._mask = mask or compile_masks(None)
        self._tokenize = tokenize
        self.capabilities = self.inner.capabilities
        self.batch_limit = self.inner.batch_limit
        self.backend_id = f"template-pure:{self.inner.backend_id}"

    def run_task(self, task: str, lines: list[str]) -> list:
        masked = [" ".join(self._tokenize(line, self._mask)) for line in lines]
        return self.inner.run_task(task, masked)


def build_backend(cfg: LabelerConfig):
    tables = load_keyword_tables(cfg.keyword_file) if cfg.keyword_file else None
    if cfg.backend == "remote":
        return RemoteBackend(cfg.endpoint, cfg.timeout_ms, cfg.retries)
    return RuleBackend(tables)


def classify_batch(
    backend,
    lines: list[str],
    warnings: list[str] | None = None,
    fallback: RuleBackend | None = None,
) -> list[LabelSet]:
    """One LabelSet per line, order-preserving.

    Tasks outside the backend's capabilities get defaults.  When a remote
    task exhausts its retries the lines fall back to the rule backend and
    the failure is recorded in run warnings.
    """
    if len(lines) > backend.batch_limit:
        raise ValueError(f"batch of {len(lines)} exceeds limit {backend.batch_limit}")

    results: dict[str, list] = {}
    producers: dict[str, str] = {}
    for task in TASKS:
        if task not in backend.capabilities:
            if task == "gsc":
                results[task] = ["information"] * len(lines)
            elif task == "fcp":
                results[task] = [{"other"} for _ in lines]
            else:
                results[task] = [[] for _ in lines]
            producers[task] = backend.backend_id
            continue
        try:
            results[task] = backend.run_task(task, lines)
            producers[task] = backend.backend_id
        except RemoteError as exc:
            rb = fallback or RuleBackend()
            results[task] = rb.run_task(task, lines)
            producers[task] = rb.backend_id
            if warnings is not None:
                warnings.append(
                    f"labeler: {task} fell back to rule backend after "
                    f"{exc.attempts} attempts ({exc})"
                )

    used = set(producers.values())
    backend_id = backend.backend_id if used == {backend.backend_id} else "+".join(sorted(used))
    return [
        LabelSet(
            golden=results["gsc"][i],
            faults=set(results["fcp"][i]),
            entities=list(results["ner"][i]),
            backend_id=backend_id,
        )
        for i in range(len(lines))
    ]


# ---------------------------------------------------------------------------
# Evaluation


def macro_recall(predictions: list, truth: list, classes) -> float:
    """Unweighted mean of per-class recall over classes present in truth."""
    if len(predictions) != len(truth):
        raise ValueError("predictions and truth must have equal length")
    if not truth:
        raise ValueError("truth is empty")
    classes = list(classes)
    missing = [t for t in truth if t not in classes]
    if missing:
        raise ValueError(f"truth labels outside class set: {sorted(set(missing))}")

    recalls = []
    for cls in classes:
        total = sum(1 for t in truth if t == cls)
        if total == 0:
            continue  # absent from truth: excluded from the mean
        correct = sum(1 for p, t in zip(predictions, truth) if t == cls and p == cls)
        recalls.append(correct / total)
    return sum(recalls) / len(recalls)
