"""Read-only handle to a built knowledge-graph database."""

from __future__ import annotations

import hashlib
import sqlite3
from pathlib import Path


class GraphDatabase:
    """Wraps the single-file store built by the ingest step.

    All consumers open read-only connections; the only writer is
    ``build_database``, which runs before any of them exist.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fingerprint: str | None = None

    def connect(self) -> sqlite3.Connection:
        """Open a read-only connection. Safe for concurrent readers."""
        conn = sqlite3.connect(f"file:{self.path}?mode=ro", uri=True)
        conn.row_factory = sqlite3.Row
        return conn

    def fingerprint(self) -> str:
        """Content hash of the database file, cached after first use."""
        if self._fingerprint is None:
            self._fingerprint = file_fingerprint(self.path)
        return self._fingerprint

    def refresh_fingerprint(self) -> str:
        self._fingerprint = None
        return self.fingerprint()


def file_fingerprint(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
