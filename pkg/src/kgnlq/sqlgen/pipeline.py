"""The generate -> extract -> reinflate -> validate -> execute loop.

Component failures become attempt outcomes in a CorrectionTrace rather than
exceptions, so callers (CLI, service, evaluation) always get a structured
audit record.
"""

from __future__ import annotations

import logging
import re
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

from ..config import PipelineConfig
from ..db import GraphDatabase
from ..entity_index import EntityIndex
from ..ingest import SchemaCatalog
from ..ner import (
    EntityMention,
    TaggingError,
    TemplatedQuestion,
    oracle_tag,
    substitute_placeholders,
    tag,
)
from .backends import PLACEHOLDER_PATTERN, BackendError, GenerationBackend
from .executor import ExecutionError, execute
from .prompts import EMPTY_RESULT_HINT, assemble_prompt, select_demonstrations
from .validator import SqlValidationError, validate_sql

logger = logging.getLogger(__name__)

_FENCE_RE = re.compile(r"```(?:[A-Za-z0-9_+-]*)\n(.*?)```", re.DOTALL)
_SELECT_RE = re.compile(r"\bSELECT\b", re.IGNORECASE)
_PLACEHOLDER_RE = re.compile(PLACEHOLDER_PATTERN)

OUTCOME_OK = "ok"
OUTCOME_VALIDATION_ERROR = "validation_error"
OUTCOME_EXECUTION_ERROR = "execution_error"
OUTCOME_EMPTY_RESULT = "empty_result"

STOP_SUCCESS = "success"
STOP_RETRIES_EXHAUSTED = "retries_exhausted"
STOP_BACKEND_FAILURE = "backend_failure"


class ExtractionError(Exception):
    pass


class ReinflateError(Exception):
    pass


@dataclass(frozen=True, slots=True)
class Attempt:
    sql: str
    outcome: str
    row_count: int | None = None
    error: str | None = None


@dataclass(slots=True)
class CorrectionTrace:
    attempts: list[Attempt]
    final_answers: set[str] | None
    stopped_because: str
    warnings: list[str] = field(default_factory=list)


@dataclass
class QAResult:
    question: str
    mentions: list[EntityMention]
    templated: TemplatedQuestion
    trace: CorrectionTrace
    answers: set[str] | None
    warnings: list[str] = field(default_factory=list)
    timings_ms: dict[str, float] = field(default_factory=dict)


@dataclass
class PipelineDeps:
    db: GraphDatabase
    catalog: SchemaCatalog
    index: EntityIndex
    backend: GenerationBackend
    demo_pool: list[Any] = field(default_factory=list)


def extract_sql(raw: str) -> str:
    """Pull the SQL out of model output.

    The last fenced code block wins; bare output is taken from the first
    SELECT onward. A trailing semicolon is tolerated.
    """
    blocks = _FENCE_RE.findall(raw)
    candidate = blocks[-1] if blocks else None
    if candidate is None:
        m = _SELECT_RE.search(raw)
        if not m:
            raise ExtractionError("no SELECT statement found in backend output")
        candidate = raw[m.start() :]
    if not _SELECT_RE.search(candidate):
        raise ExtractionError("no SELECT statement found in backend output")
    return candidate.strip().rstrip(";").strip()


def _quote_literal(name: str) -> str:
    return "'" + name.replace("'", "''") + "'"


def reinflate(sql: str, tq: TemplatedQuestion) -> str:
    """Replace placeholder tokens in SQL with quoted canonical names.

    Placeholders the model left quoted are handled without double quoting;
    placeholders absent from the SQL are fine (the model may have inlined
    names). A placeholder with no binding is an error.
    """
    result = sql
    for placeholder, entity in tq.bindings.items():
        literal = _quote_literal(entity.candidate.canonical_name)
        result = result.replace(f"'{placeholder}'", literal)
        result = result.replace(placeholder, literal)
    leftover = _PLACEHOLDER_RE.search(result)
    if leftover:
        raise ReinflateError(f"placeholder {leftover.group()} has no binding")
    return result


def self_correct(
    tq: TemplatedQuestion,
    catalog: SchemaCatalog,
    backend: GenerationBackend,
    db: GraphDatabase,
    config: PipelineConfig,
    demos: Sequence[Any] = (),
) -> CorrectionTrace:
    """Bounded attempt loop feeding errors back into the prompt.

    Validation and execution errors append a correction turn (failed SQL
    plus verbatim error). An empty result triggers at most one retry with a
    zero-rows hint; a final empty set is a legal answer. With
    ``self_correction`` off exactly one attempt is made.
    """
    attempts: list[Attempt] = []
    warnings: list[str] = []
    corrections: list[tuple[str, str]] = []
    max_attempts = 1 + config.max_retries if config.self_correction else 1
    empty_retry_used = False

    while len(attempts) < max_attempts:
        prompt = assemble_prompt(tq, catalog, demos, config, corrections)
        try:
            raw = backend.generate(prompt)
        except BackendError as exc:
            warnings.append(f"backend failure: {exc}")
            return CorrectionTrace(attempts, None, STOP_BACKEND_FAILURE, warnings)

        try:
            sql = extract_sql(raw)
        except ExtractionError as exc:
            attempts.append(Attempt(sql="", outcome=OUTCOME_VALIDATION_ERROR, error=str(exc)))
            corrections.append((raw.strip(), str(exc)))
            continue

        try:
            sql = reinflate(sql, tq)
        except ReinflateError as exc:
            attempts.append(Attempt(sql=sql, outcome=OUTCOME_VALIDATION_ERROR, error=str(exc)))
            corrections.append((sql, str(exc)))
            continue

        try:
            vsql = validate_sql(sql, catalog, config.row_cap)
        except SqlValidationError as exc:
            attempts.append(Attempt(sql=sql, outcome=OUTCOME_VALIDATION_ERROR, error=str(exc)))
            corrections.append((sql, str(exc)))
            continue

        try:
            result = execute(vsql, db, config.exec_timeout_s)
        except ExecutionError as exc:
            attempts.append(Attempt(sql=vsql.sql, outcome=OUTCOME_EXECUTION_ERROR, error=str(exc)))
            corrections.append((vsql.sql, str(exc)))
            continue

        warnings.extend(result.warnings)
        if result.row_count == 0:
            attempts.append(Attempt(sql=vsql.sql, outcome=OUTCOME_EMPTY_RESULT, row_count=0))
            can_retry = (
                config.self_correction
                and config.empty_result_retry
                and not empty_retry_used
                and len(attempts) < max_attempts
            )
            if can_retry:
                empty_retry_used = True
                corrections.append((vsql.sql, EMPTY_RESULT_HINT))
                continue
            return CorrectionTrace(attempts, set(), STOP_SUCCESS, warnings)

        attempts.append(Attempt(sql=vsql.sql, outcome=OUTCOME_OK, row_count=result.row_count))
        return CorrectionTrace(attempts, result.answers, STOP_SUCCESS, warnings)

    return CorrectionTrace(attempts, None, STOP_RETRIES_EXHAUSTED, warnings)


def answer_question(
    question: str,
    deps: PipelineDeps,
    config: PipelineConfig,
    gold_entities: Sequence[tuple] | None = None,
) -> QAResult:
    """End-to-end: tag, substitute, pick demonstrations, run the loop.

    Component errors are folded into the result's warnings and trace so a
    structured record always comes back.
    """
    warnings: list[str] = []
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    mentions: list[EntityMention] = []
    if config.ner_mode == "oracle":
        if gold_entities is None:
            warnings.append("oracle NER requested but no gold entities supplied")
        else:
            try:
                mentions = oracle_tag(question, list(gold_entities), deps.index)
            except TaggingError as exc:
                warnings.append(f"oracle tagging failed: {exc}")
    else:
        mentions = tag(question, deps.index, config.tag_min_score)
    resolved = [m for m in mentions if m.resolved is not None]
    if len(resolved) < len(mentions):
        warnings.append(f"dropped {len(mentions) - len(resolved)} unlinked mention(s)")
    timings["ner"] = (time.perf_counter() - t0) * 1000

    t1 = time.perf_counter()
    try:
        tq = substitute_placeholders(question, resolved)
    except TaggingError as exc:
        warnings.append(f"placeholder substitution failed: {exc}")
        tq = TemplatedQuestion(original=question, templated=question, bindings={})
        resolved = []
    timings["templating"] = (time.perf_counter() - t1) * 1000

    t2 = time.perf_counter()
    demos = select_demonstrations(tq, deps.demo_pool, config.k_demos)
    timings["demonstrations"] = (time.perf_counter() - t2) * 1000

    t3 = time.perf_counter()
    trace = self_correct(tq, deps.catalog, deps.backend, deps.db, config, demos)
    timings["generation"] = (time.perf_counter() - t3) * 1000
    timings["total"] = (time.perf_counter() - t0) * 1000

    warnings.extend(trace.warnings)
    return QAResult(
        question=question,
        mentions=resolved,
        templated=tq,
        trace=trace,
        answers=trace.final_answers,
        warnings=warnings,
        timings_ms=timings,
    )
