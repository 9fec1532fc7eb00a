"""Local entity linker: normalized exact lookup plus trigram fuzzy lookup.

Stands in for a hosted search service. Fuzzy scores are trigram Jaccard over
names padded with two sentinel spaces on each side, which keeps the ranking
deterministic and index-friendly while tolerating small typos.
"""

from __future__ import annotations

import hashlib
import json
import logging
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from .db import GraphDatabase

logger = logging.getLogger(__name__)

DEFAULT_K = 5
DEFAULT_MIN_SCORE = 0.55


@dataclass(frozen=True, slots=True)
class EntityCandidate:
    node_index: int
    canonical_name: str
    node_type: str
    score: float


def normalize_name(s: str) -> str:
    """Canonical matching form: NFKC, casefolded, punctuation to spaces, collapsed."""
    s = unicodedata.normalize("NFKC", s).casefold()
    chars = [c if c.isalnum() else " " for c in s]
    return " ".join("".join(chars).split())


def trigrams(normalized: str) -> frozenset[str]:
    """Trigram set of a normalized name padded with two spaces on each side."""
    if not normalized:
        return frozenset()
    padded = f"  {normalized}  "
    return frozenset(padded[i : i + 3] for i in range(len(padded) - 2))


@dataclass
class EntityIndex:
    exact_map: dict[str, list[int]]
    trigram_postings: dict[str, list[int]]
    built_from: str
    # node metadata needed to materialize candidates
    node_names: dict[int, str] = field(default_factory=dict)
    node_types: dict[int, str] = field(default_factory=dict)
    _node_trigrams: dict[int, frozenset[str]] = field(default_factory=dict, repr=False)

    def node_trigrams(self, node_index: int) -> frozenset[str]:
        t = self._node_trigrams.get(node_index)
        if t is None:
            t = trigrams(normalize_name(self.node_names[node_index]))
            self._node_trigrams[node_index] = t
        return t

    def candidate(self, node_index: int, score: float) -> EntityCandidate:
        return EntityCandidate(
            node_index=node_index,
            canonical_name=self.node_names[node_index],
            node_type=self.node_types[node_index],
            score=score,
        )

    def fingerprint(self) -> str:
        """Stable hash of the index contents; equal databases give equal values."""
        payload = json.dumps(
            {
                "exact": {k: v for k, v in sorted(self.exact_map.items())},
                "built_from": self.built_from,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def build_index(db: GraphDatabase) -> EntityIndex:
    """Index every node name in the database. Deterministic for a fixed db."""
    exact: dict[str, list[int]] = {}
    postings: dict[str, list[int]] = {}
    names: dict[int, str] = {}
    types: dict[int, str] = {}
    node_tris: dict[int, frozenset[str]] = {}

    conn = db.connect()
    try:
        rows = conn.execute(
            "SELECT node_index, node_name, node_type FROM nodes ORDER BY node_index"
        )
        for row in rows:
            idx = row["node_index"]
            names[idx] = row["node_name"]
            types[idx] = row["node_type"]
            norm = normalize_name(row["node_name"])
            exact.setdefault(norm, []).append(idx)
            tris = trigrams(norm)
            node_tris[idx] = tris
            for tri in tris:
                postings.setdefault(tri, []).append(idx)
    finally:
        conn.close()

    if not names:
        logger.warning("entity index built over an empty nodes table")
    return EntityIndex(
        exact_map=exact,
        trigram_postings=postings,
        built_from=db.fingerprint(),
        node_names=names,
        node_types=types,
        _node_trigrams=node_tris,
    )


def lookup(
    index: EntityIndex,
    query: str,
    k: int = DEFAULT_K,
    min_score: float = DEFAULT_MIN_SCORE,
) -> list[EntityCandidate]:
    """Rank candidate nodes for a surface string.

    An exact normalized match scores 1.0 and short-circuits fuzzy ranking;
    otherwise candidates are ranked by trigram Jaccard, ties broken by
    node_index ascending. At most ``k`` results, all scoring >= ``min_score``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    norm = normalize_name(query)
    if not norm:
        return []

    exact = index.exact_map.get(norm)
    if exact:
        return [index.candidate(i, 1.0) for i in sorted(exact)[:k]]

    query_tris = trigrams(norm)
    shared: dict[int, int] = {}
    for tri in query_tris:
        for node_index in index.trigram_postings.get(tri, ()):
            shared[node_index] = shared.get(node_index, 0) + 1

    scored: list[tuple[float, int]] = []
    for node_index, inter in shared.items():
        union = len(query_tris) + len(index.node_trigrams(node_index)) - inter
        score = inter / union if union else 0.0
        if score >= min_score:
            scored.append((score, node_index))
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [index.candidate(i, s) for s, i in scored[:k]]


def save_index(index: EntityIndex, path: str | Path) -> None:
    """Serialize to a cache file keyed by the database fingerprint."""
    doc = {
        "built_from": index.built_from,
        "exact_map": index.exact_map,
        "trigram_postings": index.trigram_postings,
        "node_names": {str(k): v for k, v in index.node_names.items()},
        "node_types": {str(k): v for k, v in index.node_types.items()},
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_index(path: str | Path, db: GraphDatabase | None = None) -> EntityIndex | None:
    """Load a cached index; returns None when the cache is stale for ``db``."""
    path = Path(path)
    if not path.exists():
        return None
    doc = json.loads(path.read_text(encoding="utf-8"))
    if db is not None and doc.get("built_from") != db.fingerprint():
        logger.warning("index cache at %s is stale; rebuild required", path)
        return None
    return EntityIndex(
        exact_map=doc["exact_map"],
        trigram_postings=doc["trigram_postings"],
        built_from=doc["built_from"],
        node_names={int(k): v for k, v in doc["node_names"].items()},
        node_types={int(k): v for k, v in doc["node_types"].items()},
    )
