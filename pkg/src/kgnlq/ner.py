"""Entity mention detection and type-aware placeholder substitution.

The gazetteer tagger is one implementation of the tagging contract; the
oracle variant injects known-good entities for ablation runs. Both feed
``substitute_placeholders``, which rewrites the question so the generator
never sees raw entity strings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .entity_index import EntityCandidate, EntityIndex, lookup

DEFAULT_TAG_MIN_SCORE = 0.80
MAX_SPAN_TOKENS = 6

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)  # alphanumeric runs


class TaggingError(Exception):
    pass


@dataclass(frozen=True, slots=True)
class EntityMention:
    start: int
    end: int
    surface: str
    resolved: EntityCandidate | None = None


@dataclass(frozen=True, slots=True)
class LinkedEntity:
    placeholder: str
    candidate: EntityCandidate
    mention: EntityMention


@dataclass(frozen=True)
class TemplatedQuestion:
    original: str
    templated: str
    bindings: dict[str, LinkedEntity]

    @property
    def placeholders(self) -> list[str]:
        return list(self.bindings)

    def restore(self) -> str:
        """Substitute each placeholder back with its mention surface."""
        text = self.templated
        for placeholder, entity in self.bindings.items():
            text = text.replace(placeholder, entity.mention.surface, 1)
        return text


def tokenize(text: str) -> list[tuple[int, int]]:
    """Character spans of alphanumeric token runs."""
    return [(m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def placeholder_type(node_type: str) -> str:
    return re.sub(r"[^A-Z0-9]", "_", node_type.upper())


def tag(
    question: str,
    index: EntityIndex,
    min_score: float = DEFAULT_TAG_MIN_SCORE,
) -> list[EntityMention]:
    """Greedy longest-match gazetteer scan over token n-grams.

    A span becomes a mention when lookup returns a candidate at or above
    ``min_score``; matched tokens are consumed, so mentions never overlap.
    """
    tokens = tokenize(question)
    mentions: list[EntityMention] = []
    i = 0
    while i < len(tokens):
        matched = False
        max_len = min(MAX_SPAN_TOKENS, len(tokens) - i)
        for length in range(max_len, 0, -1):
            start = tokens[i][0]
            end = tokens[i + length - 1][1]
            span = question[start:end]
            candidates = lookup(index, span, k=1, min_score=min_score)
            if candidates:
                mentions.append(EntityMention(start, end, span, candidates[0]))
                i += length
                matched = True
                break
        if not matched:
            i += 1
    return mentions


def oracle_tag(
    question: str,
    gold_entities: list[tuple[str, int]] | list[tuple[str, int, str]],
    index: EntityIndex,
) -> list[EntityMention]:
    """Construct mentions from known-good entities, bypassing fuzzy lookup.

    Each gold surface is located at its first occurrence in the question and
    resolved with score 1.0. The index supplies canonical names and types for
    the given node indexes only; no matching is performed.
    """
    mentions: list[EntityMention] = []
    for entry in gold_entities:
        surface, node_index = entry[0], entry[1]
        start = question.find(surface)
        if start < 0:
            raise TaggingError(f"gold surface {surface!r} does not occur in the question")
        candidate = EntityCandidate(
            node_index=node_index,
            canonical_name=index.node_names[node_index],
            node_type=index.node_types[node_index],
            score=1.0,
        )
        mentions.append(EntityMention(start, start + len(surface), surface, candidate))
    mentions.sort(key=lambda m: m.start)
    return mentions


def substitute_placeholders(question: str, mentions: list[EntityMention]) -> TemplatedQuestion:
    """Rewrite the question with ``[TYPE_i]`` placeholders, left to right.

    Indexes count per type from 0 in mention order. Every mention must carry
    a resolved candidate; callers drop or oracle-resolve unlinked mentions
    first.
    """
    ordered = sorted(mentions, key=lambda m: m.start)
    for a, b in zip(ordered, ordered[1:]):
        if a.end > b.start:
            raise TaggingError(f"overlapping mentions at {a.start}:{a.end} and {b.start}:{b.end}")

    parts: list[str] = []
    bindings: dict[str, LinkedEntity] = {}
    counters: dict[str, int] = {}
    cursor = 0
    for mention in ordered:
        if mention.resolved is None:
            raise TaggingError(f"unresolved mention {mention.surface!r} at {mention.start}")
        if mention.surface != question[mention.start : mention.end]:
            raise TaggingError(f"mention surface mismatch at {mention.start}:{mention.end}")
        type_key = placeholder_type(mention.resolved.node_type)
        n = counters.get(type_key, 0)
        counters[type_key] = n + 1
        placeholder = f"[{type_key}_{n}]"
        parts.append(question[cursor : mention.start])
        parts.append(placeholder)
        cursor = mention.end
        bindings[placeholder] = LinkedEntity(placeholder, mention.resolved, mention)
    parts.append(question[cursor:])
    return TemplatedQuestion(original=question, templated="".join(parts), bindings=bindings)
