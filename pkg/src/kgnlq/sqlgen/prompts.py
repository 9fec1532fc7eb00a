"""Prompt construction: schema linking, demonstrations, correction turns.

Prompt text lives in data files under ``prompt_data`` so that prompt
features (decomposition, chain-of-thought) can be toggled without code
changes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Sequence

from ..config import PipelineConfig
from ..ingest import SchemaCatalog
from ..ner import TemplatedQuestion


def _load_text(name: str) -> str:
    return resources.files("kgnlq.prompt_data").joinpath(name).read_text(encoding="utf-8")


SYSTEM_BASE = _load_text("system_base.txt")
DECOMPOSITION = _load_text("decomposition.txt")
CHAIN_OF_THOUGHT = _load_text("chain_of_thought.txt")
CORRECTION_TEMPLATE = _load_text("correction.txt")
EMPTY_RESULT_HINT = _load_text("empty_result_hint.txt").strip()


@dataclass(frozen=True)
class Prompt:
    system_text: str
    schema_excerpt: str
    demonstrations: list[tuple[str, str]]
    user_text: str
    # structured view used by local backends and the correction loop
    templated_question: str = ""
    corrections: list[tuple[str, str]] = field(default_factory=list)

    def messages(self) -> list[dict[str, str]]:
        """Chat-protocol rendering for HTTP backends."""
        msgs = [{"role": "system", "content": f"{self.system_text}\n\n{self.schema_excerpt}"}]
        for question, sql in self.demonstrations:
            msgs.append({"role": "user", "content": question})
            msgs.append({"role": "assistant", "content": f"```sql\n{sql}\n```"})
        msgs.append({"role": "user", "content": self.user_text})
        for sql, error in self.corrections:
            msgs.append({"role": "assistant", "content": sql})
            msgs.append(
                {"role": "user", "content": CORRECTION_TEMPLATE.format(sql=sql, error=error)}
            )
        return msgs

    def rendered(self) -> str:
        """Flat text rendering; used for determinism checks and logging."""
        return "\n".join(f"[{m['role']}] {m['content']}" for m in self.messages())


_WORD_RE = re.compile(r"[a-z0-9_]+")


def _token_set(text: str) -> frozenset[str]:
    return frozenset(_WORD_RE.findall(text.casefold()))


def select_demonstrations(
    tq: TemplatedQuestion,
    pool: Sequence[Any],
    k: int,
) -> list[Any]:
    """Top-k pool examples by token Jaccard between templated questions.

    Pool items only need ``templated_question`` and ``id`` attributes; ties
    break on id ascending so selection is deterministic.
    """
    if k <= 0 or not pool:
        return []
    query_tokens = _token_set(tq.templated)
    scored = []
    for ex in pool:
        tokens = _token_set(ex.templated_question)
        union = query_tokens | tokens
        sim = len(query_tokens & tokens) / len(union) if union else 0.0
        scored.append((-sim, ex.id, ex))
    scored.sort(key=lambda t: (t[0], t[1]))
    return [ex for _, _, ex in scored[:k]]


def render_schema_excerpt(catalog: SchemaCatalog, placeholder_types: set[str]) -> str:
    """Schema linking: both table definitions plus the relations touching
    the question's entity types. With no placeholders there is no filtering
    basis, so the full relation list is included."""
    lines = ["Tables:"]
    for name, cols in catalog.tables:
        col_text = ", ".join(col for col, _ in cols)
        lines.append(f"  {name}({col_text})")

    relations = catalog.relations
    if placeholder_types:
        touching = [
            (rel, count, pairs)
            for rel, count, pairs in relations
            if any(src in placeholder_types or tgt in placeholder_types for src, tgt in pairs)
        ]
        if touching:
            relations = touching
        lines.append("Entity types in the question:")
        for t in sorted(placeholder_types):
            count = dict(catalog.entity_types).get(t, 0)
            lines.append(f"  {t} ({count} nodes)")
    else:
        lines.append("Entity types:")
        for t, count in catalog.entity_types:
            lines.append(f"  {t} ({count} nodes)")

    lines.append("Relations (source type -> target type):")
    for rel, count, pairs in relations:
        pair_text = ", ".join(f"{src} -> {tgt}" for src, tgt in pairs)
        lines.append(f"  {rel}: {pair_text} ({count} edges)")
    return "\n".join(lines)


def render_user_text(tq: TemplatedQuestion) -> str:
    lines = [f"Question: {tq.templated}"]
    if tq.bindings:
        lines.append("")
        lines.append("Placeholders:")
        for placeholder, entity in tq.bindings.items():
            lines.append(
                f"  {placeholder} = '{entity.candidate.canonical_name}'"
                f" (type: {entity.candidate.node_type})"
            )
    return "\n".join(lines)


def assemble_prompt(
    tq: TemplatedQuestion,
    catalog: SchemaCatalog,
    demos: Sequence[Any],
    config: PipelineConfig,
    corrections: Sequence[tuple[str, str]] = (),
) -> Prompt:
    system_parts = [SYSTEM_BASE.strip()]
    if config.decomposition:
        system_parts.append(DECOMPOSITION.strip())
    if config.chain_of_thought:
        system_parts.append(CHAIN_OF_THOUGHT.strip())

    placeholder_types = {e.candidate.node_type for e in tq.bindings.values()}
    return Prompt(
        system_text="\n\n".join(system_parts),
        schema_excerpt=render_schema_excerpt(catalog, placeholder_types),
        demonstrations=[(ex.question, ex.gold_sql) for ex in demos],
        user_text=render_user_text(tq),
        templated_question=tq.templated,
        corrections=list(corrections),
    )
