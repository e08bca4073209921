"""Key-value knowledge base answering ``<tool_call>`` queries."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .config_space import ConfigSpace, ValueDomain


@dataclass(frozen=True)
class KnowledgeBase:
    entries: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def __len__(self) -> int:
        return len(self.entries)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"key": k, "text": self.entries[k]}, sort_keys=True) + "\n"
            for k in sorted(self.entries)
        )


def kb_query(kb: KnowledgeBase, query: str) -> str | None:
    """Exact-key lookup; ``None`` when absent."""
    if not query:
        return None
    return kb.entries.get(query)


def load_kb(source: str | Iterable[str]) -> KnowledgeBase:
    lines = source.splitlines() if isinstance(source, str) else list(source)
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(lines, 1):
        if not raw.strip():
            continue
        rec = json.loads(raw)
        if not isinstance(rec, dict) or not isinstance(rec.get("key"), str) or not isinstance(rec.get("text"), str):
            raise ValueError(f"line {lineno}: KB records are {{\"key\": str, \"text\": str}}")
        if rec["key"] in entries:
            raise ValueError(f"line {lineno}: duplicate KB key {rec['key']}")
        entries[rec["key"]] = rec["text"]
    return KnowledgeBase(entries)


def build_knowledge_base(space: ConfigSpace) -> KnowledgeBase:
    """One help entry per symbol: kind, admissible values and dependencies."""
    entries = {}
    for name in space.names():
        sym = space[name]
        if isinstance(sym.domain, ValueDomain):
            values = (f"integer in [{sym.domain.lo}, {sym.domain.hi}]" if sym.domain.is_range
                      else ", ".join(map(str, sym.domain.literals)))
        else:
            values = ", ".join(sym.domain)
        deps = ", ".join(f"{d}={v}" for d, v in sym.depends_on) or "none"
        entries[name] = f"{name} ({sym.kind}). Values: {values}. Default: {sym.default}. Depends on: {deps}."
    return KnowledgeBase(entries)
