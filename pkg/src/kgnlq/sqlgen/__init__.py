"""SQL generation: prompts, backends, validation, execution, self-correction."""

from .backends import (
    BackendError,
    FaultyBackend,
    GenerationBackend,
    HttpChatBackend,
    OracleBackend,
)
from .executor import ExecutionError, ExecutionResult, execute
from .pipeline import (
    Attempt,
    CorrectionTrace,
    ExtractionError,
    PipelineDeps,
    QAResult,
    ReinflateError,
    answer_question,
    extract_sql,
    reinflate,
    self_correct,
)
from .prompts import Prompt, assemble_prompt, select_demonstrations
from .validator import SqlValidationError, ValidatedSQL, validate_sql

__all__ = [
    "Attempt",
    "BackendError",
    "CorrectionTrace",
    "ExecutionError",
    "ExecutionResult",
    "ExtractionError",
    "FaultyBackend",
    "GenerationBackend",
    "HttpChatBackend",
    "OracleBackend",
    "PipelineDeps",
    "Prompt",
    "QAResult",
    "ReinflateError",
    "SqlValidationError",
    "ValidatedSQL",
    "answer_question",
    "assemble_prompt",
    "execute",
    "extract_sql",
    "reinflate",
    "select_demonstrations",
    "self_correct",
    "validate_sql",
]
