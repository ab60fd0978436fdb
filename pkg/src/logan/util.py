"""Shared serialization helpers: RFC-3339 instants, canonical JSON."""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone


def rfc3339(ts: datetime | None) -> str | None:
    """UTC instant with millisecond resolution, e.g. 2023-07-17T20:26:44.000Z."""
    if ts is None:
        return None
    ts = ts.astimezone(timezone.utc)
    return ts.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts.microsecond // 1000:03d}Z"


def canonical_json(obj) -> str:
    """Stable JSON text: sorted keys, no insignificant whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()[:16]
