"""Runtime configuration for the pipeline, CLI, and service."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml


@dataclass(frozen=True)
class PipelineConfig:
    ner_mode: str = "gazetteer"  # gazetteer | oracle
    tag_min_score: float = 0.80
    link_k: int = 5
    link_min_score: float = 0.55
    self_correction: bool = True
    max_retries: int = 3
    empty_result_retry: bool = True
    k_demos: int = 3
    row_cap: int = 1000
    exec_timeout_s: float = 10.0
    decomposition: bool = True
    chain_of_thought: bool = True

    def with_overrides(self, **kwargs: Any) -> "PipelineConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs)


@dataclass
class BackendSpec:
    kind: str  # oracle | http-chat | faulty
    base_url: str = ""
    model: str = ""
    key_env: str = "KGNLQ_API_KEY"
    temperature: float = 0.0
    timeout_s: float = 60.0
    max_in_flight: int = 4


@dataclass
class AppConfig:
    db_path: str = ""
    dataset_dir: str = ""
    backends: dict[str, BackendSpec] = field(default_factory=dict)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    default_backend: str = "oracle"

    @classmethod
    def from_file(cls, path: str | Path) -> "AppConfig":
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        backends = {
            name: BackendSpec(**spec) for name, spec in (doc.get("backends") or {}).items()
        }
        pipeline = PipelineConfig(**(doc.get("pipeline") or {}))
        return cls(
            db_path=doc.get("db_path", ""),
            dataset_dir=doc.get("dataset_dir", ""),
            backends=backends,
            pipeline=pipeline,
            default_backend=doc.get("default_backend", "oracle"),
        )
