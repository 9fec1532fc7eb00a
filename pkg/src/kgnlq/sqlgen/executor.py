"""Execution of validated SQL against the read-only graph database."""

from __future__ import annotations

import sqlite3
import time
from dataclasses import dataclass, field

from ..db import GraphDatabase
from .validator import ValidatedSQL

DEFAULT_TIMEOUT_S = 10.0


class ExecutionError(Exception):
    pass


@dataclass(slots=True)
class ExecutionResult:
    answers: set[str]
    row_count: int
    warnings: list[str] = field(default_factory=list)


def execute(
    vsql: ValidatedSQL,
    db: GraphDatabase,
    timeout_s: float = DEFAULT_TIMEOUT_S,
) -> ExecutionResult:
    """Run a validated statement; the first column becomes the answer set.

    Values are stringified and deduplicated. Multi-column results keep only
    the first column, with a warning in the result.
    """
    conn = db.connect()
    deadline = time.monotonic() + timeout_s
    # sqlite calls the handler roughly every N opcodes; returning nonzero aborts.
    conn.set_progress_handler(lambda: 1 if time.monotonic() > deadline else 0, 10_000)
    try:
        try:
            cursor = conn.execute(vsql.sql)
            rows = cursor.fetchall()
        except sqlite3.OperationalError as exc:
            if "interrupted" in str(exc):
                raise ExecutionError(f"query timed out after {timeout_s:.0f}s") from exc
            raise ExecutionError(str(exc)) from exc
        except sqlite3.Error as exc:
            raise ExecutionError(str(exc)) from exc
    finally:
        conn.close()

    warnings = []
    if rows and len(rows[0]) > 1:
        warnings.append(f"result has {len(rows[0])} columns; keeping only the first")
    answers = {str(row[0]) for row in rows}
    return ExecutionResult(answers=answers, row_count=len(rows), warnings=warnings)
