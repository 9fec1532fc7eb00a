"""Synthetic question generation over knowledge-graph metapaths.

Every witnessed type-level path gets natural-language templates paired with
SQL templates over the same slots, so each sampled anchor yields a question,
its gold SQL, and the executed gold answers in one step. Generated datasets
double as demonstration pools for few-shot prompting.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path

from .db import GraphDatabase
from .ingest import SchemaCatalog
from .ner import placeholder_type
from .sqlgen.executor import ExecutionError, execute
from .sqlgen.validator import SqlValidationError, validate_sql

logger = logging.getLogger(__name__)

DEFAULT_N_SINGLE = 60
DEFAULT_N_TWO = 204
DATASET_FORMAT_VERSION = 1


class TemplateError(Exception):
    pass


@dataclass(frozen=True)
class MetaPath:
    hops: int
    steps: tuple[tuple[str, str, str], ...]
    answer_type: str

    def __post_init__(self) -> None:
        if len(self.steps) != self.hops:
            raise ValueError("steps length must equal hop count")
        for a, b in zip(self.steps, self.steps[1:]):
            if a[2] != b[0]:
                raise ValueError("consecutive steps must chain on the middle type")

    @property
    def anchor_type(self) -> str:
        return self.steps[0][0]

    @property
    def signature(self) -> str:
        return "|".join(",".join(step) for step in self.steps)

    def to_dict(self) -> dict:
        return {
            "hops": self.hops,
            "steps": [list(step) for step in self.steps],
            "answer_type": self.answer_type,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MetaPath":
        return cls(
            hops=doc["hops"],
            steps=tuple(tuple(step) for step in doc["steps"]),
            answer_type=doc["answer_type"],
        )


@dataclass(frozen=True)
class TemplateRow:
    template_id: str
    hops: int
    signature: str
    nl_pattern: str
    sql_pattern: str


@dataclass
class TemplateTable:
    rows: list[TemplateRow]

    def for_signature(self, signature: str) -> list[TemplateRow]:
        return sorted(
            (r for r in self.rows if r.signature == signature), key=lambda r: r.template_id
        )

    def table_hash(self) -> str:
        payload = "\n".join(
            "\t".join((r.template_id, str(r.hops), r.signature, r.nl_pattern, r.sql_pattern))
            for r in sorted(self.rows, key=lambda r: r.template_id)
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def save(self, path: str | Path) -> None:
        lines = ["template_id\thops\tsignature\tnl_pattern\tsql_pattern"]
        for r in self.rows:
            lines.append(
                "\t".join((r.template_id, str(r.hops), r.signature, r.nl_pattern, r.sql_pattern))
            )
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TemplateTable":
        rows = []
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines:
            raise TemplateError(f"{path}: empty template table")
        header = lines[0].split("\t")
        expected = ["template_id", "hops", "signature", "nl_pattern", "sql_pattern"]
        if header != expected:
            raise TemplateError(f"{path}: template table header must be {expected}")
        for line_no, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise TemplateError(f"{path}:{line_no}: expected 5 tab-separated columns")
            template_id, hops, signature, nl_pattern, sql_pattern = parts
            nl_slots = set(_slot_names(nl_pattern))
            sql_slots = set(_slot_names(sql_pattern))
            if nl_slots != sql_slots:
                raise TemplateError(
                    f"{path}:{line_no}: NL slots {nl_slots} != SQL slots {sql_slots}"
                )
            rows.append(TemplateRow(template_id, int(hops), signature, nl_pattern, sql_pattern))
        return cls(rows)


def _slot_names(pattern: str) -> list[str]:
    import re

    return re.findall(r"\{([A-Z][A-Z0-9_]*)\}", pattern)


@dataclass(frozen=True)
class PathInstance:
    metapath: MetaPath
    anchor_index: int
    anchor_name: str
    witness: tuple[str, ...]  # node names along one concrete path, anchor first


@dataclass
class QAExample:
    id: str
    question: str
    templated_question: str
    entities: list[tuple[str, int, str]]  # (surface, node_index, node_type)
    gold_sql: str
    gold_answers: set[str]
    hops: int
    metapath: MetaPath
    template_id: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "question": self.question,
            "templated_question": self.templated_question,
            "entities": [
                {"surface": s, "node_index": i, "node_type": t} for s, i, t in self.entities
            ],
            "gold_sql": self.gold_sql,
            "gold_answers": sorted(self.gold_answers),
            "hops": self.hops,
            "metapath": self.metapath.to_dict(),
            "template_id": self.template_id,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "QAExample":
        return cls(
            id=doc["id"],
            question=doc["question"],
            templated_question=doc["templated_question"],
            entities=[(e["surface"], e["node_index"], e["node_type"]) for e in doc["entities"]],
            gold_sql=doc["gold_sql"],
            gold_answers=set(doc["gold_answers"]),
            hops=doc["hops"],
            metapath=MetaPath.from_dict(doc["metapath"]),
            template_id=doc["template_id"],
        )


@dataclass
class Dataset:
    manifest: dict
    examples: list[QAExample]

    def to_jsonl(self) -> str:
        lines = [json.dumps({"kind": "manifest", **self.manifest}, sort_keys=True)]
        for ex in self.examples:
            lines.append(json.dumps({"kind": "example", **ex.to_dict()}, sort_keys=True))
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Dataset":
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def from_jsonl(cls, text: str) -> "Dataset":
        manifest: dict = {}
        examples: list[QAExample] = []
        for line in text.splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            kind = doc.pop("kind", "example")
            if kind == "manifest":
                manifest = doc
            else:
                examples.append(QAExample.from_dict(doc))
        return cls(manifest=manifest, examples=examples)

    def content_id(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode("utf-8")).hexdigest()[:16]

    def by_hops(self, hops: int) -> list[QAExample]:
        return [ex for ex in self.examples if ex.hops == hops]


def enumerate_metapaths(catalog: SchemaCatalog, hops: int) -> list[MetaPath]:
    """All distinct metapaths whose every step is witnessed, in lexicographic
    order of their step tuples."""
    if hops not in (1, 2):
        raise ValueError("hops must be 1 or 2")
    single_steps = sorted(
        (src, rel, tgt)
        for rel, _, pairs in catalog.relations
        for src, tgt in pairs
    )
    if hops == 1:
        return [MetaPath(1, (step,), step[2]) for step in single_steps]
    paths = [
        MetaPath(2, (first, second), second[2])
        for first in single_steps
        for second in single_steps
        if first[2] == second[0]
    ]
    paths.sort(key=lambda mp: mp.steps)
    return paths


_ANCHOR_SQL_1HOP = (
    "SELECT DISTINCT n1.node_index, n1.node_name FROM nodes n1"
    " JOIN edges e1 ON e1.x_index = n1.node_index"
    " JOIN nodes n2 ON n2.node_index = e1.y_index"
    " WHERE n1.node_type = ? AND e1.relation = ? AND n2.node_type = ?"
    " ORDER BY n1.node_index"
)

_ANCHOR_SQL_2HOP = (
    "SELECT DISTINCT n1.node_index, n1.node_name FROM nodes n1"
    " JOIN edges e1 ON e1.x_index = n1.node_index"
    " JOIN nodes n2 ON n2.node_index = e1.y_index"
    " JOIN edges e2 ON e2.x_index = n2.node_index"
    " JOIN nodes n3 ON n3.node_index = e2.y_index"
    " WHERE n1.node_type = ? AND e1.relation = ? AND n2.node_type = ?"
    " AND e2.relation = ? AND n3.node_type = ?"
    " ORDER BY n1.node_index"
)

_WITNESS_SQL_1HOP = (
    "SELECT n2.node_name FROM edges e1"
    " JOIN nodes n2 ON n2.node_index = e1.y_index"
    " WHERE e1.x_index = ? AND e1.relation = ? AND n2.node_type = ?"
    " ORDER BY n2.node_index LIMIT 1"
)

_WITNESS_SQL_2HOP = (
    "SELECT n2.node_name, n3.node_name FROM edges e1"
    " JOIN nodes n2 ON n2.node_index = e1.y_index"
    " JOIN edges e2 ON e2.x_index = n2.node_index"
    " JOIN nodes n3 ON n3.node_index = e2.y_index"
    " WHERE e1.x_index = ? AND e1.relation = ? AND n2.node_type = ?"
    " AND e2.relation = ? AND n3.node_type = ?"
    " ORDER BY n2.node_index, n3.node_index LIMIT 1"
)


def sample_instances(
    db: GraphDatabase, metapath: MetaPath, n: int, seed: int
) -> list[PathInstance]:
    """Seeded uniform sample of distinct anchors that have a complete path.

    Returns fewer than ``n`` when the graph cannot supply that many; the
    order is deterministic for fixed (db, metapath, n, seed).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    conn = db.connect()
    try:
        if metapath.hops == 1:
            (src, rel, tgt) = metapath.steps[0]
            anchors = conn.execute(_ANCHOR_SQL_1HOP, (src, rel, tgt)).fetchall()
        else:
            (src, rel1, mid) = metapath.steps[0]
            (_, rel2, tgt) = metapath.steps[1]
            anchors = conn.execute(_ANCHOR_SQL_2HOP, (src, rel1, mid, rel2, tgt)).fetchall()

        rng = random.Random(f"{seed}|{metapath.signature}")
        pool = list(anchors)
        if n >= len(pool):
            rng.shuffle(pool)
            chosen = pool
        else:
            chosen = rng.sample(pool, n)

        instances = []
        for row in chosen:
            anchor_index, anchor_name = row[0], row[1]
            if metapath.hops == 1:
                (src, rel, tgt) = metapath.steps[0]
                w = conn.execute(_WITNESS_SQL_1HOP, (anchor_index, rel, tgt)).fetchone()
                witness = (anchor_name, w[0]) if w else (anchor_name,)
            else:
                (src, rel1, mid) = metapath.steps[0]
                (_, rel2, tgt) = metapath.steps[1]
                w = conn.execute(
                    _WITNESS_SQL_2HOP, (anchor_index, rel1, mid, rel2, tgt)
                ).fetchone()
                witness = (anchor_name, w[0], w[1]) if w else (anchor_name,)
            instances.append(PathInstance(metapath, anchor_index, anchor_name, witness))
        return instances
    finally:
        conn.close()


def _sql_quote(value: str) -> str:
    return "'" + value.replace("'", "''") + "'"


def _one_hop_sql(src: str, rel: str, tgt: str) -> str:
    return (
        "SELECT DISTINCT n2.node_name FROM nodes n1"
        " JOIN edges e1 ON e1.x_index = n1.node_index"
        " JOIN nodes n2 ON n2.node_index = e1.y_index"
        " WHERE n1.node_name = '{A}'"
        f" AND n1.node_type = {_sql_quote(src)}"
        f" AND e1.relation = {_sql_quote(rel)}"
        f" AND n2.node_type = {_sql_quote(tgt)}"
    )


def _two_hop_sql(src: str, rel1: str, mid: str, rel2: str, tgt: str) -> str:
    return (
        "SELECT DISTINCT n3.node_name FROM nodes n1"
        " JOIN edges e1 ON e1.x_index = n1.node_index"
        " JOIN nodes n2 ON n2.node_index = e1.y_index"
        " JOIN edges e2 ON e2.x_index = n2.node_index"
        " JOIN nodes n3 ON n3.node_index = e2.y_index"
        " WHERE n1.node_name = '{A}'"
        f" AND n1.node_type = {_sql_quote(src)}"
        f" AND e1.relation = {_sql_quote(rel1)}"
        f" AND n2.node_type = {_sql_quote(mid)}"
        f" AND e2.relation = {_sql_quote(rel2)}"
        f" AND n3.node_type = {_sql_quote(tgt)}"
    )


def default_template_table(catalog: SchemaCatalog) -> TemplateTable:
    """Two generic phrasings per witnessed metapath, with matching SQL.

    Only the anchor name is a slot; types and relations are burned into
    each row since rows are keyed by metapath signature.
    """
    rows: list[TemplateRow] = []
    for i, mp in enumerate(enumerate_metapaths(catalog, 1)):
        src, rel, tgt = mp.steps[0]
        sql = _one_hop_sql(src, rel, tgt)
        rows.append(
            TemplateRow(
                f"1h{i:03d}a", 1, mp.signature,
                f"Which {tgt} nodes are linked to the {src} {{A}} by {rel}?",
                sql,
            )
        )
        rows.append(
            TemplateRow(
                f"1h{i:03d}b", 1, mp.signature,
                f"List the {tgt} nodes connected from the {src} {{A}} through {rel}.",
                sql,
            )
        )
    for i, mp in enumerate(enumerate_metapaths(catalog, 2)):
        src, rel1, mid = mp.steps[0]
        _, rel2, tgt = mp.steps[1]
        sql = _two_hop_sql(src, rel1, mid, rel2, tgt)
        rows.append(
            TemplateRow(
                f"2h{i:03d}a", 2, mp.signature,
                f"Which {tgt} nodes are reachable from the {src} {{A}}"
                f" via {rel1} and then {rel2}?",
                sql,
            )
        )
        rows.append(
            TemplateRow(
                f"2h{i:03d}b", 2, mp.signature,
                f"Starting from the {src} {{A}}, follow {rel1} then {rel2};"
                f" which {tgt} nodes result?",
                sql,
            )
        )
    return TemplateTable(rows)


def render_example(
    instance: PathInstance,
    template: TemplateRow,
    db: GraphDatabase,
    catalog: SchemaCatalog,
    example_id: str,
) -> QAExample | None:
    """Fill one template with one instance; None when gold answers are empty."""
    mp = instance.metapath
    question = template.nl_pattern.replace("{A}", instance.anchor_name)
    placeholder = f"[{placeholder_type(mp.anchor_type)}_0]"
    templated = template.nl_pattern.replace("{A}", placeholder)
    gold_sql = template.sql_pattern.replace("'{A}'", _sql_quote(instance.anchor_name))

    try:
        vsql = validate_sql(gold_sql, catalog)
        result = execute(vsql, db)
    except (SqlValidationError, ExecutionError) as exc:
        raise TemplateError(f"template {template.template_id} produced bad SQL: {exc}") from exc
    if not result.answers:
        return None
    return QAExample(
        id=example_id,
        question=question,
        templated_question=templated,
        entities=[(instance.anchor_name, instance.anchor_index, mp.anchor_type)],
        gold_sql=gold_sql,
        gold_answers=result.answers,
        hops=mp.hops,
        metapath=mp,
        template_id=template.template_id,
    )


def _metapath_stream(
    db: GraphDatabase,
    metapath: MetaPath,
    templates: list[TemplateRow],
    seed: int,
):
    """(instance, template) pairs: all anchors in sampled order x templates."""
    instances = sample_instances(db, metapath, n=1_000_000_000, seed=seed)
    for instance in instances:
        for template in templates:
            yield instance, template


def generate_dataset(
    db: GraphDatabase,
    catalog: SchemaCatalog,
    template_table: TemplateTable,
    n_single: int = DEFAULT_N_SINGLE,
    n_two: int = DEFAULT_N_TWO,
    seed: int = 0,
) -> Dataset:
    """Emit exactly the requested counts when the graph can supply them.

    Metapaths are visited round-robin so every witnessed path family
    contributes before any repeats; shortfalls produce a manifest warning
    rather than an error.
    """
    if n_single < 0 or n_two < 0:
        raise ValueError("counts must be >= 0")
    examples: list[QAExample] = []
    warnings: list[str] = []
    actual = {"single": 0, "two": 0}

    for hops, target, label in ((1, n_single, "single"), (2, n_two, "two")):
        if target == 0:
            continue
        metapaths = enumerate_metapaths(catalog, hops)
        streams = []
        for mp in metapaths:
            templates = template_table.for_signature(mp.signature)
            if not templates:
                logger.warning("no template for metapath %s; skipping", mp.signature)
                continue
            streams.append(_metapath_stream(db, mp, templates, seed))
        count = 0
        seq = 0
        while count < target and streams:
            exhausted = []
            for stream in streams:
                if count >= target:
                    break
                item = next(stream, None)
                if item is None:
                    exhausted.append(stream)
                    continue
                instance, template = item
                example = render_example(
                    instance, template, db, catalog, f"ex{hops}h{seq:05d}"
                )
                seq += 1
                if example is None:
                    continue
                examples.append(example)
                count += 1
            streams = [s for s in streams if s not in exhausted]
        actual[label] = count
        if count < target:
            warnings.append(
                f"requested {target} {label}-hop examples but the graph supplied {count}"
            )
            logger.warning(warnings[-1])

    manifest = {
        "version": DATASET_FORMAT_VERSION,
        "seed": seed,
        "requested": {"single": n_single, "two": n_two},
        "actual": actual,
        "db_fingerprint": db.fingerprint(),
        "template_table_hash": template_table.table_hash(),
        "warnings": warnings,
    }
    return Dataset(manifest=manifest, examples=examples)


def render_review(dataset: Dataset) -> str:
    """Human-readable audit of a generated dataset, one block per example."""
    lines = [
        f"dataset seed={dataset.manifest.get('seed')}"
        f" examples={len(dataset.examples)}"
        f" db={dataset.manifest.get('db_fingerprint', '')[:12]}",
        "",
    ]
    for ex in dataset.examples:
        lines.append(f"[{ex.id}] ({ex.hops}-hop, template {ex.template_id})")
        lines.append(f"  Q: {ex.question}")
        lines.append(f"  SQL: {ex.gold_sql}")
        lines.append(f"  answers: {', '.join(sorted(ex.gold_answers))}")
        lines.append("")
    return "\n".join(lines)
