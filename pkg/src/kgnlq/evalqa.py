"""EM/F1 scoring, per-hop aggregation, and the ablation matrix runner.

Metrics operate on answer sets, since gold answers are node-name sets;
aggregation is a macro-average over examples, reported overall and split by
hop count.
"""

from __future__ import annotations

import logging
import unicodedata
from dataclasses import dataclass, field, replace

from .config import PipelineConfig
from .qgen import Dataset
from .sqlgen.executor import ExecutionError, execute
from .sqlgen.pipeline import STOP_BACKEND_FAILURE, PipelineDeps, answer_question
from .sqlgen.validator import SqlValidationError, validate_sql

logger = logging.getLogger(__name__)


class DatasetCorruptionError(Exception):
    pass


def normalize_answer(s: str) -> str:
    s = unicodedata.normalize("NFKC", s).casefold()
    return " ".join(s.split())


def _normalize_set(values: set[str]) -> set[str]:
    return {normalize_answer(v) for v in values}


def exact_match(pred: set[str], gold: set[str]) -> int:
    """1 iff the normalized sets are equal; two empty sets match."""
    return 1 if _normalize_set(pred) == _normalize_set(gold) else 0


def f1(pred: set[str], gold: set[str]) -> float:
    """Harmonic mean of set precision and recall over normalized values.

    Conventions: both empty -> 1.0, exactly one empty -> 0.0, disjoint -> 0.0.
    """
    p_set = _normalize_set(pred)
    g_set = _normalize_set(gold)
    if not p_set and not g_set:
        return 1.0
    if not p_set or not g_set:
        return 0.0
    inter = len(p_set & g_set)
    if inter == 0:
        return 0.0
    precision = inter / len(p_set)
    recall = inter / len(g_set)
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class ExampleScore:
    example_id: str
    hops: int
    em: int
    f1: float
    attempts: int
    stopped_because: str
    predicted: list[str] = field(default_factory=list)
    # stored trace, so report consumers can show the exact attempts
    attempt_records: list[dict] = field(default_factory=list)


@dataclass(frozen=True)
class GroupStats:
    n: int
    em: float
    f1: float


@dataclass
class EvalReport:
    setting: str
    scores: list[ExampleScore]
    backend_failures: int = 0

    def group(self, hops: int | None = None) -> GroupStats:
        rows = self.scores if hops is None else [s for s in self.scores if s.hops == hops]
        if not rows:
            return GroupStats(0, 0.0, 0.0)
        return GroupStats(
            n=len(rows),
            em=sum(s.em for s in rows) / len(rows),
            f1=sum(s.f1 for s in rows) / len(rows),
        )

    def to_dict(self) -> dict:
        overall = self.group()
        one = self.group(1)
        two = self.group(2)
        return {
            "setting": self.setting,
            "backend_failures": self.backend_failures,
            "aggregates": {
                "single_hop": {"n": one.n, "em": one.em, "f1": one.f1},
                "two_hop": {"n": two.n, "em": two.em, "f1": two.f1},
                "overall": {"n": overall.n, "em": overall.em, "f1": overall.f1},
            },
            "examples": [
                {
                    "example_id": s.example_id,
                    "hops": s.hops,
                    "em": s.em,
                    "f1": s.f1,
                    "attempts": s.attempts,
                    "stopped_because": s.stopped_because,
                    "predicted": s.predicted,
                    "attempt_records": s.attempt_records,
                }
                for s in self.scores
            ],
        }


@dataclass(frozen=True)
class EvalSetting:
    label: str
    ner_mode: str  # gazetteer | oracle
    self_correction: bool


CANONICAL_SETTINGS: tuple[EvalSetting, ...] = (
    EvalSetting("Full", "gazetteer", True),
    EvalSetting("-NER", "oracle", True),
    EvalSetting("-SC", "gazetteer", False),
    EvalSetting("-NER-SC", "oracle", False),
)

SETTING_BY_NAME = {
    "full": CANONICAL_SETTINGS[0],
    "no-ner": CANONICAL_SETTINGS[1],
    "no-sc": CANONICAL_SETTINGS[2],
    "no-ner-no-sc": CANONICAL_SETTINGS[3],
}


def preflight_dataset(dataset: Dataset, deps: PipelineDeps, config: PipelineConfig) -> None:
    """Re-execute every gold SQL and compare with the stored gold answers."""
    for ex in dataset.examples:
        try:
            vsql = validate_sql(ex.gold_sql, deps.catalog, config.row_cap)
            result = execute(vsql, deps.db, config.exec_timeout_s)
        except (SqlValidationError, ExecutionError) as exc:
            raise DatasetCorruptionError(f"{ex.id}: gold SQL no longer runs: {exc}") from exc
        if _normalize_set(result.answers) != _normalize_set(ex.gold_answers):
            raise DatasetCorruptionError(
                f"{ex.id}: gold SQL re-executes to {sorted(result.answers)},"
                f" stored answers are {sorted(ex.gold_answers)}"
            )


def evaluate(
    dataset: Dataset,
    config: PipelineConfig,
    deps: PipelineDeps,
    setting_label: str = "Full",
    preflight: bool = True,
) -> EvalReport:
    """Run the pipeline over every example and score it.

    Examples whose trace ends without answers (including backend failures,
    which are also counted separately) score zero on both metrics.
    """
    if preflight:
        preflight_dataset(dataset, deps, config)

    scores: list[ExampleScore] = []
    backend_failures = 0
    for ex in dataset.examples:
        golds = ex.entities if config.ner_mode == "oracle" else None
        result = answer_question(ex.question, deps, config, gold_entities=golds)
        if result.trace.stopped_because == STOP_BACKEND_FAILURE:
            backend_failures += 1
        if result.answers is None:
            em_val, f1_val = 0, 0.0
            predicted: list[str] = []
        else:
            em_val = exact_match(result.answers, ex.gold_answers)
            f1_val = f1(result.answers, ex.gold_answers)
            predicted = sorted(result.answers)
        scores.append(
            ExampleScore(
                example_id=ex.id,
                hops=ex.hops,
                em=em_val,
                f1=f1_val,
                attempts=len(result.trace.attempts),
                stopped_because=result.trace.stopped_because,
                predicted=predicted,
                attempt_records=[
                    {"sql": a.sql, "outcome": a.outcome, "row_count": a.row_count, "error": a.error}
                    for a in result.trace.attempts
                ],
            )
        )
    return EvalReport(setting=setting_label, scores=scores, backend_failures=backend_failures)


@dataclass
class AblationResult:
    reports: list[EvalReport]

    def table(self) -> dict:
        """Preformatted cells; the CLI table and the console dashboard both
        render exactly these strings."""
        columns = [
            "Setting",
            "1-hop EM", "1-hop F1",
            "2-hop EM", "2-hop F1",
            "Overall EM", "Overall F1",
        ]
        rows = []
        for report in self.reports:
            one, two, overall = report.group(1), report.group(2), report.group()
            rows.append(
                {
                    "label": report.setting,
                    "cells": [
                        f"{one.em:.3f}", f"{one.f1:.3f}",
                        f"{two.em:.3f}", f"{two.f1:.3f}",
                        f"{overall.em:.3f}", f"{overall.f1:.3f}",
                    ],
                }
            )
        return {"columns": columns, "rows": rows}

    def render_text(self) -> str:
        table = self.table()
        widths = [len(c) for c in table["columns"]]
        for row in table["rows"]:
            widths[0] = max(widths[0], len(row["label"]))
            for i, cell in enumerate(row["cells"], start=1):
                widths[i] = max(widths[i], len(cell))
        header = "  ".join(c.ljust(widths[i]) for i, c in enumerate(table["columns"]))
        lines = [header, "-" * len(header)]
        for row in table["rows"]:
            cells = [row["label"].ljust(widths[0])] + [
                cell.rjust(widths[i + 1]) for i, cell in enumerate(row["cells"])
            ]
            lines.append("  ".join(cells))
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"table": self.table(), "reports": [r.to_dict() for r in self.reports]}


def ablation_matrix(
    dataset: Dataset,
    settings: list[EvalSetting],
    deps: PipelineDeps,
    config: PipelineConfig | None = None,
) -> AblationResult:
    """One EvalReport per requested setting, in request order."""
    if not settings:
        raise ValueError("at least one setting is required")
    base = config or PipelineConfig()
    preflight_dataset(dataset, deps, base)
    reports = []
    for setting in settings:
        run_config = replace(
            base, ner_mode=setting.ner_mode, self_correction=setting.self_correction
        )
        reports.append(
            evaluate(dataset, run_config, deps, setting_label=setting.label, preflight=False)
        )
    return AblationResult(reports)
