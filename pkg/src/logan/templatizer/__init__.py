"""Template clustering over a fixed-depth parse tree.

Log bodies are whitespace-tokenized, variable-looking tokens are masked
to "<*>", and sequences descend a tree (token count, then the first
`depth-1` tokens) to a leaf holding candidate templates.  The most
similar candidate above the threshold absorbs the sequence (differing
positions wildcarded); otherwise the sequence becomes a new template.

The leaf scan is the hot loop; it lives in a compiled kernel with a
pure-Python twin.  Set LOGAN_PURE_PYTHON=1 to force the fallback.
"""

from __future__ import annotations

import os
import random
import re
from dataclasses import dataclass, field

from ..config import TemplatizerConfig

if os.environ.get("LOGAN_PURE_PYTHON"):
    from . import _tree_py as _kernel
else:
    try:
        from . import _tree_cy as _kernel  # type: ignore[attr-defined]
    except ImportError:
        from . import _tree_py as _kernel

KERNEL = _kernel.NAME
WILDCARD = "<*>"

# Default mask table: integers, hex ids (>= 4 chars, at least one digit so
# ordinary words like "added" survive), IPv4 with optional port, UUIDs,
# name=value pairs with long values, and word_123-style ids.
DEFAULT_MASKS = [
    r"\d+",
    r"0[xX][0-9a-fA-F]+",
    r"(?=[0-9a-fA-F]*\d)[0-9a-fA-F]{4,}",
    r"(?:\d{1,3}\.){3}\d{1,3}(?::\d+)?",
    r"[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{12}",
    r"[\w.\-]+=\S{17,}",
    r"[A-Za-z]+_\d+",
]


def compile_masks(patterns: list[str] | None) -> re.Pattern:
    rules = DEFAULT_MASKS if patterns is None else patterns
    return re.compile("|".join(f"(?:{p})" for p in rules))


def tokenize(body: str, mask: re.Pattern) -> list[str]:
    """Whitespace-split, with variable-looking tokens replaced by "<*>"."""
    return [WILDCARD if mask.fullmatch(tok) else tok for tok in body.split()]


@dataclass(slots=True)
class LogTemplate:
    template_id: int
    tokens: list[str]
    cluster_size: int
    representative_record_id: int
    first_seen_record_id: int
    is_blank: bool = False

    def text(self) -> str:
        return " ".join(self.tokens) if self.tokens else "<blank>"


_LEAF = None  # reserved child key holding the leaf template list


@dataclass
class TemplateStore:
    cfg: TemplatizerConfig = field(default_factory=TemplatizerConfig)
    root: dict = field(default_factory=dict)  # token count -> token levels -> leaf
    templates: list[LogTemplate] = field(default_factory=list)
    assignment: dict[int, int] = field(default_factory=dict)  # record_id -> template_id
    _mask: re.Pattern = None  # type: ignore[assignment]
    _blank_id: int | None = None

    def __post_init__(self):
        self._mask = compile_masks(self.cfg.masks)

    def tokenize(self, body: str) -> list[str]:
        return tokenize(body, self._mask)

    def process(self, record_id: int, body: str) -> tuple[int, bool]:
        """Assign one record to a template, creating it if needed."""
        seq = self.tokenize(body)
        if not seq:
            return self._assign_blank(record_id)
        return match_or_insert(self, seq, record_id)

    def _assign_blank(self, record_id: int) -> tuple[int, bool]:
        if self._blank_id is None:
            t = LogTemplate(
                template_id=len(self.templates), tokens=[], cluster_size=0,
                representative_record_id=record_id, first_seen_record_id=record_id,
                is_blank=True,
            )
            self.templates.append(t)
            self._blank_id = t.template_id
            created = True
        else:
            created = False
        t = self.templates[self._blank_id]
        t.cluster_size += 1
        self.assignment[record_id] = t.template_id
        return t.template_id, created

    def members(self, template_id: int) -> list[int]:
        return sorted(r for r, t in self.assignment.items() if t == template_id)


def _descend(node: dict, token: str, max_children: int) -> dict:
    # Exact child when present; otherwise create one while capacity lasts
    # (one slot is reserved for the wildcard branch); else wildcard.
    if token != WILDCARD:
        nxt = node.get(token)
        if nxt is not None:
            return nxt
        if len(node) - (_LEAF in node) < max_children - 1:
            nxt = node[token] = {}
            return nxt
    nxt = node.get(WILDCARD)
    if nxt is None:
        nxt = node[WILDCARD] = {}
    return nxt


def match_or_insert(store: TemplateStore, seq: list[str], record_id: int) -> tuple[int, bool]:
    """Route a non-empty token sequence to its cluster.

    Returns (template_id, is_new).  Merging wildcards every position where
    the incoming sequence disagrees with the stored template.
    """
    node = store.root.setdefault(len(seq), {})
    for i in range(min(store.cfg.depth - 1, len(seq))):
        node = _descend(node, seq[i], store.cfg.max_children)
    leaf = node.get(_LEAF)
    if leaf is None:
        leaf = node[_LEAF] = []

    idx, sim = _kernel.best_match([t.tokens for t in leaf], seq)
    if idx >= 0 and sim >= store.cfg.sim_threshold:
        t = leaf[idx]
        t.tokens = _kernel.merge_tokens(t.tokens, seq)
        t.cluster_size += 1
        store.assignment[record_id] = t.template_id
        return t.template_id, False

    t = LogTemplate(
        template_id=len(store.templates), tokens=list(seq), cluster_size=1,
        representative_record_id=record_id, first_seen_record_id=record_id,
    )
    store.templates.append(t)
    leaf.append(t)
    store.assignment[record_id] = t.template_id
    return t.template_id, True


def similarity(seq: list[str], template: LogTemplate) -> float:
    """Token-equality ratio; wildcard positions never count as matches."""
    if len(seq) != len(template.tokens):
        raise ValueError(
            f"length mismatch: seq has {len(seq)} tokens, "
            f"template {template.template_id} has {len(template.tokens)}"
        )
    if not seq:
        return 0.0
    eq = sum(1 for a, b in zip(template.tokens, seq) if a == b and a != WILDCARD)
    return eq / len(seq)


def representative_set(store: TemplateStore) -> dict[int, int]:
    """One representative record per cluster.

    Deterministic mode (default) keeps the record that created each
    template; seeded-random mode samples uniformly from the members.
    """
    if store.cfg.representative == "first_seen":
        return {t.template_id: t.first_seen_record_id for t in store.templates}

    members: dict[int, list[int]] = {t.template_id: [] for t in store.templates}
    for record_id in sorted(store.assignment):
        members[store.assignment[record_id]].append(record_id)
    rng = random.Random(store.cfg.seed)
    chosen: dict[int, int] = {}
    for t in store.templates:
        pool = members[t.template_id] or [t.first_seen_record_id]
        t.representative_record_id = rng.choice(pool)
        chosen[t.template_id] = t.representative_record_id
    return chosen
