"""Node/edge file parsing and materialization into the relational store.

The graph ships as two delimiter-separated files (nodes, edges) with header
rows, and is materialized into exactly two tables so that generated SQL is
always a join over ``nodes`` and ``edges``.
"""

from __future__ import annotations

import csv
import logging
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .db import GraphDatabase

logger = logging.getLogger(__name__)

NODE_FIELDS = ("node_index", "node_type", "node_name", "node_source", "node_source_id")
EDGE_FIELDS = ("relation", "display_relation", "x_index", "y_index")
REQUIRED_EDGE_FIELDS = ("relation", "x_index", "y_index")


class IngestError(Exception):
    """Structural problem in the input files or target database."""


@dataclass(frozen=True, slots=True)
class KGNode:
    node_index: int
    node_type: str
    node_name: str
    node_source: str = ""
    node_source_id: str = ""


@dataclass(frozen=True, slots=True)
class KGEdge:
    relation: str
    display_relation: str
    x_index: int
    y_index: int


@dataclass(frozen=True, slots=True)
class RejectedRow:
    line_number: int
    reason: str


@dataclass(slots=True)
class NodeParseResult:
    nodes: list[KGNode]
    rejected: list[RejectedRow] = field(default_factory=list)


@dataclass(slots=True)
class EdgeParseResult:
    edges: list[KGEdge]
    rejected: list[RejectedRow] = field(default_factory=list)


@dataclass(frozen=True, slots=True)
class IngestStats:
    node_count: int
    edge_count: int
    dangling_edge_count: int


@dataclass(frozen=True)
class SchemaCatalog:
    """What the database actually contains, for prompting and validation."""

    tables: list[tuple[str, list[tuple[str, str]]]]
    entity_types: list[tuple[str, int]]
    relations: list[tuple[str, int, list[tuple[str, str]]]]
    warnings: list[str] = field(default_factory=list)

    @property
    def table_columns(self) -> dict[str, list[str]]:
        return {name: [col for col, _ in cols] for name, cols in self.tables}

    @property
    def entity_type_names(self) -> list[str]:
        return [t for t, _ in self.entity_types]

    @property
    def relation_names(self) -> list[str]:
        return [r for r, _, _ in self.relations]

    def relation_pairs(self, relation: str) -> list[tuple[str, str]]:
        for name, _, pairs in self.relations:
            if name == relation:
                return pairs
        return []

    def is_empty(self) -> bool:
        return not self.entity_types and not self.relations


TABLE_DEFS: list[tuple[str, list[tuple[str, str]]]] = [
    (
        "nodes",
        [
            ("node_index", "key"),
            ("node_type", "entity type"),
            ("node_name", "name"),
            ("node_source", "provenance"),
            ("node_source_id", "provenance"),
        ],
    ),
    (
        "edges",
        [
            ("relation", "relation type"),
            ("display_relation", "label"),
            ("x_index", "source node key"),
            ("y_index", "target node key"),
        ],
    ),
]


def _sniff_delimiter(path: Path) -> str:
    with open(path, encoding="utf-8", newline="") as f:
        header = f.readline()
    # Auto-detection only chooses between comma and tab.
    return "\t" if header.count("\t") >= header.count(",") else ","


def _resolve_delimiter(path: Path, delimiter: str) -> str:
    if delimiter == "auto":
        return _sniff_delimiter(path)
    if delimiter in ("comma", ","):
        return ","
    if delimiter in ("tab", "\t"):
        return "\t"
    raise IngestError(f"unsupported delimiter spec {delimiter!r} (use auto, comma, or tab)")


def _header_positions(header: Sequence[str], required: Sequence[str], path: Path) -> dict[str, int]:
    positions = {name.strip(): i for i, name in enumerate(header)}
    missing = [name for name in required if name not in positions]
    if missing:
        raise IngestError(f"{path}: header is missing required column(s) {', '.join(missing)}")
    return positions


def parse_nodes(path: str | Path, delimiter: str = "auto") -> NodeParseResult:
    """Parse the node file. Data-level problems skip the row; structural ones raise."""
    path = Path(path)
    sep = _resolve_delimiter(path, delimiter)
    nodes: list[KGNode] = []
    rejected: list[RejectedRow] = []
    seen: dict[int, int] = {}  # node_index -> line number

    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f, delimiter=sep)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: file is empty, expected a header row") from None
        pos = _header_positions(header, NODE_FIELDS, path)

        for line_no, row in enumerate(reader, start=2):
            if not any(cell.strip() for cell in row):
                continue
            try:
                index = int(row[pos["node_index"]].strip())
            except (ValueError, IndexError):
                rejected.append(RejectedRow(line_no, "non-integer node_index"))
                continue
            if index < 0:
                rejected.append(RejectedRow(line_no, f"negative node_index {index}"))
                continue
            if index in seen:
                raise IngestError(
                    f"{path}: duplicate node_index {index} on lines {seen[index]} and {line_no}"
                )
            try:
                name = row[pos["node_name"]].strip()
                node_type = row[pos["node_type"]].strip()
                source = row[pos["node_source"]].strip()
                source_id = row[pos["node_source_id"]].strip()
            except IndexError:
                rejected.append(RejectedRow(line_no, "row has fewer columns than header"))
                continue
            if not name:
                rejected.append(RejectedRow(line_no, "empty node_name"))
                continue
            seen[index] = line_no
            nodes.append(KGNode(index, node_type, name, source, source_id))

    for rej in rejected:
        logger.warning("%s:%d rejected: %s", path, rej.line_number, rej.reason)
    return NodeParseResult(nodes=nodes, rejected=rejected)


def parse_edges(path: str | Path, delimiter: str = "auto") -> EdgeParseResult:
    """Parse the edge file, in file order. Endpoint checking happens at build time."""
    path = Path(path)
    sep = _resolve_delimiter(path, delimiter)
    edges: list[KGEdge] = []
    rejected: list[RejectedRow] = []

    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f, delimiter=sep)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: file is empty, expected a header row") from None
        pos = _header_positions(header, REQUIRED_EDGE_FIELDS, path)
        has_display = "display_relation" in {h.strip() for h in header}
        if has_display:
            pos["display_relation"] = [h.strip() for h in header].index("display_relation")

        for line_no, row in enumerate(reader, start=2):
            if not any(cell.strip() for cell in row):
                continue
            try:
                x = int(row[pos["x_index"]].strip())
                y = int(row[pos["y_index"]].strip())
            except (ValueError, IndexError):
                rejected.append(RejectedRow(line_no, "non-integer x_index/y_index"))
                continue
            try:
                relation = row[pos["relation"]].strip()
                display = row[pos["display_relation"]].strip() if has_display else relation
            except IndexError:
                rejected.append(RejectedRow(line_no, "row has fewer columns than header"))
                continue
            edges.append(KGEdge(relation, display or relation, x, y))

    for rej in rejected:
        logger.warning("%s:%d rejected: %s", path, rej.line_number, rej.reason)
    return EdgeParseResult(edges=edges, rejected=rejected)


_SCHEMA_SQL = """
CREATE TABLE nodes (
    node_index     INTEGER PRIMARY KEY,
    node_type      TEXT NOT NULL,
    node_name      TEXT NOT NULL,
    node_source    TEXT NOT NULL DEFAULT '',
    node_source_id TEXT NOT NULL DEFAULT ''
);
CREATE TABLE edges (
    relation         TEXT NOT NULL,
    display_relation TEXT NOT NULL,
    x_index          INTEGER NOT NULL,
    y_index          INTEGER NOT NULL
);
"""

_INDEX_SQL = """
CREATE INDEX idx_nodes_name ON nodes(node_name);
CREATE INDEX idx_nodes_name_norm ON nodes(lower(trim(node_name)));
CREATE INDEX idx_nodes_type ON nodes(node_type);
CREATE INDEX idx_edges_x ON edges(x_index, relation);
CREATE INDEX idx_edges_y ON edges(y_index, relation);
"""


def build_database(
    nodes: Iterable[KGNode],
    edges: Iterable[KGEdge],
    db_path: str | Path,
) -> IngestStats:
    """Materialize parsed records at ``db_path``, replacing any previous build.

    Edges whose endpoints are missing from ``nodes`` are dropped and counted
    as dangling rather than failing the build.
    """
    db_path = Path(db_path)
    nodes = list(nodes)
    if not nodes:
        raise IngestError("cannot build a database from zero nodes")
    if db_path.exists():
        db_path.unlink()

    try:
        conn = sqlite3.connect(db_path)
    except sqlite3.OperationalError as exc:
        raise IngestError(f"cannot write database at {db_path}: {exc}") from exc
    try:
        conn.execute("PRAGMA journal_mode=MEMORY")
        conn.execute("PRAGMA synchronous=OFF")
        conn.executescript(_SCHEMA_SQL)
        conn.executemany(
            "INSERT INTO nodes VALUES (?, ?, ?, ?, ?)",
            (
                (n.node_index, n.node_type, n.node_name, n.node_source, n.node_source_id)
                for n in nodes
            ),
        )
        known = {n.node_index for n in nodes}
        kept = 0
        dangling = 0
        batch: list[tuple[str, str, int, int]] = []
        for e in edges:
            if e.x_index in known and e.y_index in known:
                batch.append((e.relation, e.display_relation, e.x_index, e.y_index))
                kept += 1
                if len(batch) >= 50_000:
                    conn.executemany("INSERT INTO edges VALUES (?, ?, ?, ?)", batch)
                    batch.clear()
            else:
                dangling += 1
        if batch:
            conn.executemany("INSERT INTO edges VALUES (?, ?, ?, ?)", batch)
        conn.executescript(_INDEX_SQL)
        conn.commit()
    except sqlite3.OperationalError as exc:
        raise IngestError(f"cannot write database at {db_path}: {exc}") from exc
    finally:
        conn.close()

    if dangling and kept == 0:
        logger.warning("all %d edges were dangling; database has no edges", dangling)
    elif dangling:
        logger.warning("dropped %d dangling edge(s)", dangling)
    return IngestStats(node_count=len(nodes), edge_count=kept, dangling_edge_count=dangling)


def schema_catalog(db: GraphDatabase) -> SchemaCatalog:
    """Summarize the vocabularies actually present, in a reproducible order."""
    conn = db.connect()
    try:
        entity_types = [
            (row["node_type"], row["n"])
            for row in conn.execute(
                "SELECT node_type, COUNT(*) AS n FROM nodes GROUP BY node_type ORDER BY node_type"
            )
        ]
        relations: list[tuple[str, int, list[tuple[str, str]]]] = []
        counts = {
            row["relation"]: row["n"]
            for row in conn.execute("SELECT relation, COUNT(*) AS n FROM edges GROUP BY relation")
        }
        pair_rows = conn.execute(
            "SELECT e.relation AS rel, nx.node_type AS src, ny.node_type AS tgt, COUNT(*) AS n"
            " FROM edges e"
            " JOIN nodes nx ON nx.node_index = e.x_index"
            " JOIN nodes ny ON ny.node_index = e.y_index"
            " GROUP BY e.relation, nx.node_type, ny.node_type"
        ).fetchall()
        pairs_by_rel: dict[str, list[tuple[str, str]]] = {}
        for row in pair_rows:
            pairs_by_rel.setdefault(row["rel"], []).append((row["src"], row["tgt"]))
        for rel in sorted(counts):
            relations.append((rel, counts[rel], sorted(pairs_by_rel.get(rel, []))))
    finally:
        conn.close()

    warnings = []
    if not entity_types:
        warnings.append("database contains no nodes")
        logger.warning("schema catalog built over an empty database")
    return SchemaCatalog(
        tables=[(name, list(cols)) for name, cols in TABLE_DEFS],
        entity_types=entity_types,
        relations=relations,
        warnings=warnings,
    )
