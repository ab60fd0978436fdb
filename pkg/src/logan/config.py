"""Run configuration: defaults, file loading (TOML/JSON), validation, digest.

Every pipeline stage reads its parameters from one merged ``RunConfig``.
Precedence is CLI flags > environment > config file > built-in defaults;
the merge happens in :mod:`logan.cli`, this module only knows how to load,
validate and fingerprint a configuration.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib


class ConfigError(ValueError):
    """Invalid configuration value or unparseable config file."""


_DURATION_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(ms|s|m|h|d)?\s*$")
_DURATION_UNITS = {"ms": 0.001, "s": 1.0, "m": 60.0, "h": 3600.0, "d": 86400.0}


def parse_duration(value: Any) -> float:
    """Accepts seconds as a number or strings like "30s", "1m", "2h"."""
    if isinstance(value, bool):
        raise ConfigError(f"not a duration: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _DURATION_RE.match(value)
        if m:
            return float(m.group(1)) * _DURATION_UNITS[m.group(2) or "s"]
    raise ConfigError(f"not a duration: {value!r}")


@dataclass
class IngestConfig:
    formats: list[str] = field(default_factory=lambda: ["default"])
    include: list[str] = field(default_factory=lambda: ["**/*"])
    exclude: list[str] = field(default_factory=list)


@dataclass
class TemplatizerConfig:
    depth: int = 4
    sim_threshold: float = 0.4
    max_children: int = 100
    masks: list[str] | None = None  # None -> built-in mask table
    representative: str = "first_seen"  # or "random"
    seed: int | None = None


@dataclass
class LabelerConfig:
    backend: str = "rule"  # "rule" or "remote"
    endpoint: str | None = None
    timeout_ms: int = 5000
    retries: int = 2
    pool: int = 4
    keyword_file: str | None = None  # JSON/TOML file overriding rule tables


@dataclass
class BroadcastConfig:
    per_line_entities: bool = False
    emit_enriched: str | None = None  # path for the JSON-lines dump


@dataclass
class CausalConfig:
    interval: float = 60.0
    max_lag: int = 3
    alpha: float = 0.05
    difference: bool = False


@dataclass
class ReportsConfig:
    granularity: float = 60.0
    granularity_set: list[float] = field(default_factory=lambda: [30.0, 60.0, 300.0])
    temporal_bucket: float = 3600.0
    window_cap: int = 500


@dataclass
class JobsvcConfig:
    data_dir: str = "./logan-data"
    pool_size: int = 2
    webhook_url: str | None = None
    host: str = "127.0.0.1"
    port: int = 8080


@dataclass
class RunConfig:
    ingest: IngestConfig = field(default_factory=IngestConfig)
    templatizer: TemplatizerConfig = field(default_factory=TemplatizerConfig)
    labeler: LabelerConfig = field(default_factory=LabelerConfig)
    broadcast: BroadcastConfig = field(default_factory=BroadcastConfig)
    causal: CausalConfig = field(default_factory=CausalConfig)
    reports: ReportsConfig = field(default_factory=ReportsConfig)
    jobsvc: JobsvcConfig = field(default_factory=JobsvcConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


_DURATION_KEYS = {
    ("causal", "interval"),
    ("reports", "granularity"),
    ("reports", "temporal_bucket"),
}
_DURATION_LIST_KEYS = {("reports", "granularity_set")}


def _coerce(section: str, key: str, value: Any, target: Any) -> Any:
    if (section, key) in _DURATION_KEYS:
        return parse_duration(value)
    if (section, key) in _DURATION_LIST_KEYS:
        return [parse_duration(v) for v in value]
    if isinstance(target, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "1", "0"):
            return value.lower() in ("true", "1")
        raise ConfigError(f"{section}.{key}: expected a boolean, got {value!r}")
    if isinstance(target, int) and not isinstance(target, bool) and not isinstance(value, bool):
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{section}.{key}: expected an integer, got {value!r}") from None
    if isinstance(target, float):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{section}.{key}: expected a number, got {value!r}") from None
    return value


def merge_into(config: RunConfig, data: dict, warnings: list[str] | None = None) -> RunConfig:
    """Apply a nested {section: {key: value}} mapping onto a RunConfig.

    Unknown sections/keys produce warnings, not errors, so configs stay
    forward-compatible.
    """
    for section, block in data.items():
        sub = getattr(config, section, None)
        if sub is None or not dataclasses.is_dataclass(sub):
            if warnings is not None:
                warnings.append(f"config: unknown section {section!r} ignored")
            continue
        if not isinstance(block, dict):
            raise ConfigError(f"config section {section!r} must be a table/object")
        for key, value in block.items():
            if not hasattr(sub, key):
                if warnings is not None:
                    warnings.append(f"config: unknown key {section}.{key} ignored")
                continue
            current = getattr(sub, key)
            setattr(sub, key, _coerce(section, key, value, current))
    return config


def load_file(path: str | Path) -> dict:
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix == ".toml":
        return tomllib.loads(raw.decode("utf-8"))
    if path.suffix == ".json":
        return json.loads(raw.decode("utf-8"))
    # Sniff: TOML first (logan.toml is the documented default), then JSON.
    try:
        return tomllib.loads(raw.decode("utf-8"))
    except Exception:
        try:
            return json.loads(raw.decode("utf-8"))
        except Exception:
            raise ConfigError(f"cannot parse config file {path} as TOML or JSON") from None


def load_config(path: str | Path | None = None, warnings: list[str] | None = None) -> RunConfig:
    config = RunConfig()
    if path is not None:
        merge_into(config, load_file(path), warnings)
    return config


def validate(config: RunConfig) -> list[str]:
    """Returns a list of violations; empty means the config is usable."""
    bad = []
    t = config.templatizer
    if t.depth < 2:
        bad.append("templatizer.depth must be >= 2")
    if not (0.0 <= t.sim_threshold <= 1.0):
        bad.append("templatizer.sim_threshold must be in [0, 1]")
    if t.max_children < 1:
        bad.append("templatizer.max_children must be >= 1")
    if t.representative not in ("first_seen", "random"):
        bad.append("templatizer.representative must be 'first_seen' or 'random'")
    if config.labeler.backend not in ("rule", "remote"):
        bad.append("labeler.backend must be 'rule' or 'remote'")
    if config.labeler.backend == "remote" and not config.labeler.endpoint:
        bad.append("labeler.endpoint required when backend is 'remote'")
    if config.labeler.retries < 0:
        bad.append("labeler.retries must be >= 0")
    c = config.causal
    if c.interval <= 0:
        bad.append("causal.interval must be > 0")
    if c.max_lag < 1:
        bad.append("causal.max_lag must be >= 1")
    if not (0.0 < c.alpha < 1.0):
        bad.append("causal.alpha must be in (0, 1)")
    r = config.reports
    if r.granularity <= 0:
        bad.append("reports.granularity must be > 0")
    if r.granularity not in r.granularity_set:
        bad.append("reports.granularity must be one of reports.granularity_set")
    if r.temporal_bucket <= 0:
        bad.append("reports.temporal_bucket must be > 0")
    if r.window_cap < 1:
        bad.append("reports.window_cap must be >= 1")
    if config.jobsvc.pool_size < 1:
        bad.append("jobsvc.pool_size must be >= 1")
    return bad
