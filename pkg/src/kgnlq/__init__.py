"""Natural-language question answering over a typed knowledge graph.

Pipeline: entity tagging -> type-aware placeholders -> SQL generation with
self-correction -> execution over a read-only relational store, plus a
synthetic question generator and an EM/F1 ablation harness.
"""

__version__ = "0.1.0"

from .db import GraphDatabase
from .ingest import build_database, parse_edges, parse_nodes, schema_catalog

__all__ = [
    "GraphDatabase",
    "build_database",
    "parse_edges",
    "parse_nodes",
    "schema_catalog",
    "__version__",
]
