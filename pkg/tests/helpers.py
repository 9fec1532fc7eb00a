"""Shared test machinery: synthetic graph builders and dataset mutators."""

from __future__ import annotations

import random
from dataclasses import replace

from kgnlq.db import GraphDatabase
from kgnlq.ingest import KGEdge, KGNode, build_database
from kgnlq.qgen import Dataset, QAExample

TYPE_WORDS = [
    "alpha", "beta", "gamma", "delta", "epsilon",
    "zeta", "eta", "theta", "iota", "kappa",
]


def make_random_kg(
    db_path,
    n_nodes: int = 1000,
    n_types: int = 10,
    n_relations: int = 30,
    n_edges: int = 4000,
    seed: int = 42,
) -> GraphDatabase:
    """Random typed graph where every relation has a fixed (source, target)
    type pair, so type-level paths always compose."""
    assert n_types <= len(TYPE_WORDS)
    rng = random.Random(seed)
    types = TYPE_WORDS[:n_types]

    nodes = []
    by_type: dict[str, list[int]] = {t: [] for t in types}
    for i in range(n_nodes):
        t = types[i % n_types]
        nodes.append(KGNode(i, t, f"{t}{i:05d}", "synthetic", str(i)))
        by_type[t].append(i)

    # source type cycles, target offset by 3 so two-hop chains exist everywhere
    relations = []
    for r in range(n_relations):
        src = types[r % n_types]
        tgt = types[(r + 3) % n_types]
        relations.append((f"rel_{chr(ord('a') + r // 26)}{chr(ord('a') + r % 26)}", src, tgt))

    def gen_edges():
        for _ in range(n_edges):
            rel, src, tgt = relations[rng.randrange(n_relations)]
            yield KGEdge(rel, rel.replace("_", " "), rng.choice(by_type[src]), rng.choice(by_type[tgt]))

    build_database(nodes, gen_edges(), db_path)
    return GraphDatabase(db_path)


def inject_typos(dataset: Dataset, fraction: float = 0.5, seed: int = 0) -> Dataset:
    """Delete one interior character from the entity surface of a seeded
    subset of questions, keeping gold SQL/answers intact. The entity list is
    updated so an oracle tagger can still locate the mangled surface."""
    rng = random.Random(seed)
    n = round(len(dataset.examples) * fraction)
    chosen = set(rng.sample(range(len(dataset.examples)), n))
    mutated: list[QAExample] = []
    for i, ex in enumerate(dataset.examples):
        if i not in chosen or not ex.entities:
            mutated.append(ex)
            continue
        surface, node_index, node_type = ex.entities[0]
        if len(surface) < 3:
            mutated.append(ex)
            continue
        pos = rng.randrange(1, len(surface) - 1)
        typo = surface[:pos] + surface[pos + 1 :]
        mutated.append(
            replace(
                ex,
                question=ex.question.replace(surface, typo, 1),
                entities=[(typo, node_index, node_type)],
            )
        )
    manifest = dict(dataset.manifest)
    manifest["typo_fraction"] = fraction
    return Dataset(manifest=manifest, examples=mutated)


def typo_indices(dataset: Dataset, fraction: float = 0.5, seed: int = 0) -> set[int]:
    """The example positions inject_typos mutates for the same arguments."""
    rng = random.Random(seed)
    n = round(len(dataset.examples) * fraction)
    return set(rng.sample(range(len(dataset.examples)), n))
