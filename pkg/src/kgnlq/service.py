"""HTTP API exposing the pipeline to the web console and scripts.

Traces are first-class payloads: every ask returns the full pipeline audit
record, including failed attempts, because inspecting the stages is the
console's core function.
"""

from __future__ import annotations

import json
import logging
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from .config import AppConfig
from .db import GraphDatabase
from .entity_index import build_index
from .evalqa import SETTING_BY_NAME, ablation_matrix
from .ingest import schema_catalog
from .qgen import Dataset, default_template_table, generate_dataset
from .sqlgen.backends import FaultyBackend, HttpChatBackend, OracleBackend
from .sqlgen.pipeline import STOP_BACKEND_FAILURE, PipelineDeps, QAResult, answer_question

logger = logging.getLogger(__name__)

# Published response shapes; the test suite validates live responses against
# these, and the web console's types mirror them.
RESPONSE_SCHEMAS: dict[str, dict] = {
    "ask": {
        "type": "object",
        "required": [
            "question", "mentions", "templated_question", "bindings",
            "attempts", "stopped_because", "answers", "warnings", "timings_ms",
        ],
        "properties": {
            "question": {"type": "string"},
            "mentions": {"type": "array", "items": {"type": "object"}},
            "templated_question": {"type": "string"},
            "bindings": {"type": "object"},
            "attempts": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["sql", "outcome", "row_count", "error"],
                    "properties": {
                        "sql": {"type": "string"},
                        "outcome": {
                            "enum": ["ok", "validation_error", "execution_error", "empty_result"]
                        },
                        "row_count": {"type": ["integer", "null"]},
                        "error": {"type": ["string", "null"]},
                    },
                },
            },
            "stopped_because": {
                "enum": ["success", "retries_exhausted", "backend_failure"]
            },
            "answers": {"type": ["array", "null"], "items": {"type": "string"}},
            "warnings": {"type": "array", "items": {"type": "string"}},
            "timings_ms": {"type": "object"},
        },
    },
    "schema": {
        "type": "object",
        "required": ["tables", "entity_types", "relations", "warnings"],
        "properties": {
            "tables": {"type": "array"},
            "entity_types": {
                "type": "array",
                "items": {"type": "object", "required": ["name", "count"]},
            },
            "relations": {
                "type": "array",
                "items": {"type": "object", "required": ["name", "count", "pairs"]},
            },
        },
    },
    "health": {
        "type": "object",
        "required": ["status", "db_fingerprint", "backends"],
    },
    "dataset_created": {
        "type": "object",
        "required": ["dataset_id", "manifest"],
    },
    "eval": {
        "type": "object",
        "required": ["table", "reports"],
        "properties": {
            "table": {
                "type": "object",
                "required": ["columns", "rows"],
                "properties": {
                    "rows": {
                        "type": "array",
                        "items": {"type": "object", "required": ["label", "cells"]},
                    }
                },
            },
            "reports": {"type": "array"},
        },
    },
}


class AskOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ner_mode: str | None = None
    self_correction: bool | None = None
    backend: str | None = None
    max_retries: int | None = None
    demo_dataset_id: str | None = None
    k_demos: int | None = None


class AskRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    question: str
    options: AskOptions = AskOptions()


class DatasetRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_single: int
    n_two: int
    seed: int = 0


class EvalRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dataset_id: str
    settings: list[str]
    backend: str | None = None


class ServiceState:
    def __init__(self, config: AppConfig):
        self.config = config
        self.db = GraphDatabase(config.db_path)
        self.catalog = schema_catalog(self.db)
        self.index = build_index(self.db)
        self.template_table = default_template_table(self.catalog)
        self.dataset_dir = Path(config.dataset_dir or Path(config.db_path).parent / "datasets")
        self.dataset_dir.mkdir(parents=True, exist_ok=True)
        self._store_lock = threading.Lock()

        oracle = OracleBackend(self.template_table)
        self.backends = {
            "oracle": oracle,
            "faulty": FaultyBackend(oracle, fault="column"),
        }
        for name, spec in config.backends.items():
            if spec.kind == "http-chat":
                self.backends[name] = HttpChatBackend(
                    base_url=spec.base_url,
                    model=spec.model,
                    key_env=spec.key_env,
                    temperature=spec.temperature,
                    timeout_s=spec.timeout_s,
                    max_in_flight=spec.max_in_flight,
                )

    # -- dataset store ---------------------------------------------------

    def dataset_path(self, dataset_id: str) -> Path:
        return self.dataset_dir / f"{dataset_id}.jsonl"

    def save_dataset(self, dataset: Dataset) -> str:
        dataset_id = dataset.content_id()
        path = self.dataset_path(dataset_id)
        with self._store_lock:
            if not path.exists():
                tmp = path.with_suffix(".tmp")
                tmp.write_text(dataset.to_jsonl(), encoding="utf-8")
                tmp.replace(path)
        return dataset_id

    def load_dataset(self, dataset_id: str) -> Dataset | None:
        path = self.dataset_path(dataset_id)
        if not path.exists():
            return None
        return Dataset.load(path)

    def deps(self, backend_name: str, demo_pool: list | None = None) -> PipelineDeps:
        return PipelineDeps(
            db=self.db,
            catalog=self.catalog,
            index=self.index,
            backend=self.backends[backend_name],
            demo_pool=demo_pool or [],
        )


def qa_result_to_dict(result: QAResult) -> dict:
    return {
        "question": result.question,
        "mentions": [
            {
                "start": m.start,
                "end": m.end,
                "surface": m.surface,
                "node_index": m.resolved.node_index if m.resolved else None,
                "node_type": m.resolved.node_type if m.resolved else None,
                "canonical_name": m.resolved.canonical_name if m.resolved else None,
                "score": m.resolved.score if m.resolved else None,
            }
            for m in result.mentions
        ],
        "templated_question": result.templated.templated,
        "bindings": {
            placeholder: {
                "canonical_name": e.candidate.canonical_name,
                "node_type": e.candidate.node_type,
                "node_index": e.candidate.node_index,
                "score": e.candidate.score,
                "surface": e.mention.surface,
            }
            for placeholder, e in result.templated.bindings.items()
        },
        "attempts": [
            {
                "sql": a.sql,
                "outcome": a.outcome,
                "row_count": a.row_count,
                "error": a.error,
            }
            for a in result.trace.attempts
        ],
        "stopped_because": result.trace.stopped_because,
        "answers": sorted(result.answers) if result.answers is not None else None,
        "warnings": result.warnings,
        "timings_ms": result.timings_ms,
    }


def catalog_to_dict(state: ServiceState) -> dict:
    catalog = state.catalog
    return {
        "tables": [
            {"name": name, "columns": [{"name": c, "role": r} for c, r in cols]}
            for name, cols in catalog.tables
        ],
        "entity_types": [{"name": t, "count": n} for t, n in catalog.entity_types],
        "relations": [
            {
                "name": rel,
                "count": n,
                "pairs": [{"source": s, "target": t} for s, t in pairs],
            }
            for rel, n, pairs in catalog.relations
        ],
        "warnings": catalog.warnings,
    }


def create_app(config: AppConfig, cors_origin: str | None = None) -> FastAPI:
    state = ServiceState(config)
    app = FastAPI(title="kgnlq", version="0.1.0")
    app.state.service = state

    if cors_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors())})

    def bad_request(message: str) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": message})

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "db_fingerprint": state.db.fingerprint(),
            "backends": sorted(state.backends),
        }

    @app.get("/api/schema")
    def schema():
        return catalog_to_dict(state)

    @app.post("/api/ask")
    def ask(body: AskRequest):
        if not body.question.strip():
            return bad_request("question must be non-empty")
        opts = body.options
        backend_name = opts.backend or state.config.default_backend
        if backend_name not in state.backends:
            return bad_request(
                f"unknown backend {backend_name!r}; valid backends: {sorted(state.backends)}"
            )
        pipeline = state.config.pipeline.with_overrides(
            ner_mode=opts.ner_mode,
            self_correction=opts.self_correction,
            max_retries=opts.max_retries,
            k_demos=opts.k_demos,
        )

        demo_pool: list = []
        gold_entities = None
        if opts.demo_dataset_id:
            dataset = state.load_dataset(opts.demo_dataset_id)
            if dataset is None:
                return bad_request(f"unknown demo dataset {opts.demo_dataset_id!r}")
            demo_pool = dataset.examples
            if pipeline.ner_mode == "oracle":
                match = next(
                    (ex for ex in dataset.examples if ex.question == body.question), None
                )
                if match is not None:
                    gold_entities = match.entities
        if pipeline.ner_mode == "oracle" and gold_entities is None:
            return bad_request(
                "oracle NER needs gold entities; supply demo_dataset_id of a dataset"
                " containing this exact question"
            )

        result = answer_question(
            body.question, state.deps(backend_name, demo_pool), pipeline, gold_entities
        )
        payload = qa_result_to_dict(result)
        if result.trace.stopped_because == STOP_BACKEND_FAILURE:
            return JSONResponse(status_code=503, content=payload)
        return payload

    @app.post("/api/datasets")
    def make_dataset(body: DatasetRequest):
        if body.n_single < 0 or body.n_two < 0:
            return bad_request("counts must be >= 0")
        dataset = generate_dataset(
            state.db,
            state.catalog,
            state.template_table,
            n_single=body.n_single,
            n_two=body.n_two,
            seed=body.seed,
        )
        dataset_id = state.save_dataset(dataset)
        response = {"dataset_id": dataset_id, "manifest": dataset.manifest}
        if dataset.manifest["warnings"]:
            response["warning"] = "; ".join(dataset.manifest["warnings"])
            return JSONResponse(status_code=422, content=response)
        return response

    @app.get("/api/datasets/{dataset_id}")
    def get_dataset(dataset_id: str):
        dataset = state.load_dataset(dataset_id)
        if dataset is None:
            return JSONResponse(status_code=404, content={"error": "unknown dataset id"})
        return {
            "dataset_id": dataset_id,
            "manifest": dataset.manifest,
            "examples": [ex.to_dict() for ex in dataset.examples],
        }

    @app.post("/api/eval")
    def run_eval(body: EvalRequest):
        if not body.settings:
            return bad_request("settings must be a non-empty list")
        unknown = [s for s in body.settings if s not in SETTING_BY_NAME]
        if unknown:
            return bad_request(
                f"unknown settings {unknown}; valid: {sorted(SETTING_BY_NAME)}"
            )
        backend_name = body.backend or state.config.default_backend
        if backend_name not in state.backends:
            return bad_request(
                f"unknown backend {backend_name!r}; valid backends: {sorted(state.backends)}"
            )
        dataset = state.load_dataset(body.dataset_id)
        if dataset is None:
            return JSONResponse(status_code=404, content={"error": "unknown dataset id"})

        settings = [SETTING_BY_NAME[s] for s in body.settings]
        result = ablation_matrix(
            dataset,
            settings,
            state.deps(backend_name, dataset.examples),
            state.config.pipeline,
        )
        payload = result.to_dict()
        payload["dataset_id"] = body.dataset_id
        payload["backend"] = backend_name
        report_path = state.dataset_dir / f"report-{body.dataset_id}-{backend_name}.json"
        with state._store_lock:
            report_path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
        return payload

    return app
