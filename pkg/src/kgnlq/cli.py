"""Command-line entry points: ingest, index, gen, ask, eval, serve."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import click

from .config import AppConfig, PipelineConfig
from .db import GraphDatabase
from .entity_index import build_index, save_index
from .evalqa import SETTING_BY_NAME, ablation_matrix
from .ingest import IngestError, build_database, parse_edges, parse_nodes, schema_catalog
from .qgen import Dataset, TemplateTable, default_template_table, generate_dataset, render_review
from .service import qa_result_to_dict
from .sqlgen.backends import FaultyBackend, HttpChatBackend, OracleBackend
from .sqlgen.pipeline import PipelineDeps, answer_question

logger = logging.getLogger(__name__)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Natural-language question answering over a typed knowledge graph."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--nodes", "nodes_path", required=True, type=click.Path(exists=True))
@click.option("--edges", "edges_path", required=True, type=click.Path(exists=True))
@click.option("--db", "db_path", required=True, type=click.Path())
@click.option("--delimiter", default="auto", type=click.Choice(["auto", "comma", "tab"]))
def ingest(nodes_path: str, edges_path: str, db_path: str, delimiter: str) -> None:
    """Parse node/edge files and build the database."""
    try:
        node_result = parse_nodes(nodes_path, delimiter)
        edge_result = parse_edges(edges_path, delimiter)
        stats = build_database(node_result.nodes, edge_result.edges, db_path)
    except IngestError as exc:
        raise click.ClickException(str(exc)) from exc
    rejected = len(node_result.rejected) + len(edge_result.rejected)
    click.echo(
        f"built {db_path}: {stats.node_count} nodes, {stats.edge_count} edges"
        f" ({stats.dangling_edge_count} dangling dropped, {rejected} rows rejected)"
    )


@main.command()
@click.option("--db", "db_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None)
def index(db_path: str, out_path: str | None) -> None:
    """Build the entity index, optionally writing a cache file."""
    db = GraphDatabase(db_path)
    idx = build_index(db)
    if out_path:
        save_index(idx, out_path)
        click.echo(f"wrote index cache to {out_path}")
    click.echo(f"indexed {len(idx.node_names)} nodes, fingerprint {idx.fingerprint()[:16]}")


@main.command()
@click.option("--db", "db_path", required=True, type=click.Path(exists=True))
@click.option("--single", default=60, show_default=True)
@click.option("--two", default=204, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--templates", "templates_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--review", "review_path", type=click.Path(), default=None)
def gen(
    db_path: str,
    single: int,
    two: int,
    seed: int,
    templates_path: str | None,
    out_path: str,
    review_path: str | None,
) -> None:
    """Generate a synthetic question dataset."""
    db = GraphDatabase(db_path)
    catalog = schema_catalog(db)
    table = (
        TemplateTable.load(templates_path) if templates_path else default_template_table(catalog)
    )
    dataset = generate_dataset(db, catalog, table, single, two, seed)
    dataset.save(out_path)
    actual = dataset.manifest["actual"]
    click.echo(
        f"wrote {out_path}: {actual['single']} single-hop + {actual['two']} two-hop"
        f" examples (id {dataset.content_id()})"
    )
    for warning in dataset.manifest["warnings"]:
        click.echo(f"warning: {warning}", err=True)
    if review_path:
        Path(review_path).write_text(render_review(dataset), encoding="utf-8")
        click.echo(f"wrote review file to {review_path}")


def _build_backend(name: str, catalog, app_config: AppConfig | None):
    oracle = OracleBackend(default_template_table(catalog))
    if name == "oracle":
        return oracle
    if name == "faulty":
        return FaultyBackend(oracle, fault="column")
    if name == "http-chat":
        spec = (app_config.backends.get("http-chat") if app_config else None) or None
        if spec is None or not spec.base_url:
            raise click.ClickException(
                "http-chat backend needs a config file with backends.http-chat.base_url"
            )
        return HttpChatBackend(
            base_url=spec.base_url,
            model=spec.model,
            key_env=spec.key_env,
            temperature=spec.temperature,
            timeout_s=spec.timeout_s,
            max_in_flight=spec.max_in_flight,
        )
    raise click.ClickException(f"unknown backend {name!r}; valid: oracle, faulty, http-chat")


@main.command()
@click.argument("question")
@click.option("--db", "db_path", required=True, type=click.Path(exists=True))
@click.option("--backend", default="oracle", show_default=True)
@click.option("--ner", default="gazetteer", type=click.Choice(["gazetteer", "oracle"]))
@click.option("--self-correction", default="on", type=click.Choice(["on", "off"]))
@click.option("--max-retries", default=3, show_default=True)
@click.option("--demos", "demos_path", type=click.Path(exists=True), default=None)
@click.option("-k", "k_demos", default=3, show_default=True)
@click.option("--trace", is_flag=True, help="Print the full pipeline trace as JSON.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def ask(
    question: str,
    db_path: str,
    backend: str,
    ner: str,
    self_correction: str,
    max_retries: int,
    demos_path: str | None,
    k_demos: int,
    trace: bool,
    config_path: str | None,
) -> None:
    """Answer one question end to end."""
    app_config = AppConfig.from_file(config_path) if config_path else None
    base = app_config.pipeline if app_config else PipelineConfig()
    config = base.with_overrides(
        ner_mode=ner,
        self_correction=self_correction == "on",
        max_retries=max_retries,
        k_demos=k_demos,
    )
    db = GraphDatabase(db_path)
    catalog = schema_catalog(db)
    idx = build_index(db)
    demo_pool = Dataset.load(demos_path).examples if demos_path else []

    gold_entities = None
    if ner == "oracle":
        match = next((ex for ex in demo_pool if ex.question == question), None)
        if match is None:
            raise click.ClickException(
                "--ner oracle needs gold entities: pass --demos with a dataset"
                " containing this exact question"
            )
        gold_entities = match.entities

    deps = PipelineDeps(
        db=db,
        catalog=catalog,
        index=idx,
        backend=_build_backend(backend, catalog, app_config),
        demo_pool=demo_pool,
    )
    result = answer_question(question, deps, config, gold_entities)
    if trace:
        click.echo(json.dumps(qa_result_to_dict(result), indent=2))
    elif result.answers is None:
        click.echo(f"no answer ({result.trace.stopped_because})")
        for attempt in result.trace.attempts:
            click.echo(f"  attempt [{attempt.outcome}]: {attempt.error or attempt.sql}")
    else:
        for answer in sorted(result.answers):
            click.echo(answer)


@main.command(name="eval")
@click.option("--db", "db_path", required=True, type=click.Path(exists=True))
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option(
    "--setting",
    "settings",
    multiple=True,
    type=click.Choice(sorted(SETTING_BY_NAME)),
    default=("full", "no-ner", "no-sc", "no-ner-no-sc"),
    show_default=True,
)
@click.option("--backend", default="oracle", show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def eval_command(
    db_path: str,
    dataset_path: str,
    settings: tuple[str, ...],
    backend: str,
    out_path: str | None,
    config_path: str | None,
) -> None:
    """Score a dataset under one or more ablation settings."""
    app_config = AppConfig.from_file(config_path) if config_path else None
    db = GraphDatabase(db_path)
    catalog = schema_catalog(db)
    dataset = Dataset.load(dataset_path)
    deps = PipelineDeps(
        db=db,
        catalog=catalog,
        index=build_index(db),
        backend=_build_backend(backend, catalog, app_config),
        demo_pool=dataset.examples,
    )
    result = ablation_matrix(
        dataset,
        [SETTING_BY_NAME[s] for s in settings],
        deps,
        app_config.pipeline if app_config else None,
    )
    click.echo(result.render_text())
    if out_path:
        payload = result.to_dict()
        payload["dataset"] = str(dataset_path)
        payload["backend"] = backend
        Path(out_path).write_text(json.dumps(payload, indent=2), encoding="utf-8")
        click.echo(f"wrote report to {out_path}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--port", default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--cors-origin", default=None)
def serve(config_path: str, port: int, host: str, cors_origin: str | None) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    app_config = AppConfig.from_file(config_path)
    if not app_config.db_path or not Path(app_config.db_path).exists():
        raise click.ClickException(f"config db_path {app_config.db_path!r} does not exist")
    app = create_app(app_config, cors_origin=cors_origin)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
