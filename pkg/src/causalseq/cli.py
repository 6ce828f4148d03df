"""Command-line entry points mirroring the HTTP API."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .analysis import AnalysisConfig, run_pipeline
from .errors import CausalSeqError
from .events import dataset_from_json, dataset_to_json, parse_events, read_csv, read_jsonl
from .graph import CausalGraph
from .store import Store, content_id
from .synthetic import (
    GroundTruth,
    RecoveryScore,
    random_dag,
    sample_sequences,
    score_recovery,
)

__all__ = ["main"]


def _store(data_dir: str | None) -> Store:
    return Store(data_dir)


def _canonical(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


@click.group()
def main() -> None:
    """Detect time-variant causal structure in event sequences."""


def _detect_format(text: str) -> str:
    if text.lstrip()[:1] != "{":
        return "csv"
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        return "jsonl"
    return "dataset" if isinstance(doc, dict) and "catalog" in doc else "jsonl"


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--format", "fmt", type=click.Choice(["auto", "csv", "jsonl", "dataset"]), default="auto"
)
@click.option("--data-dir", default=None, help="Store root (default: CAUSALSEQ_DATA or ./causalseq-data)")
def ingest(file: str, fmt: str, data_dir: str | None) -> None:
    """Parse and persist an event file; prints the dataset id."""
    body = Path(file).read_bytes()
    text = body.decode("utf-8")
    if fmt == "auto":
        fmt = _detect_format(text)
    try:
        if fmt == "dataset":
            ds = dataset_from_json(json.loads(text))
        else:
            records = read_jsonl(text) if fmt == "jsonl" else read_csv(text)
            ds = parse_events(records)
    except CausalSeqError as exc:
        raise click.ClickException(str(exc)) from exc
    store = _store(data_dir)
    item_id = store.put_new("datasets", content_id(body, "ds"), dataset_to_json(ds))
    click.echo(item_id)


@main.command()
@click.argument("dataset_id")
@click.option("--interval", "session_interval_ms", type=int, required=True, help="Session gap threshold in ms")
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--support", "min_support", type=float, default=0.1, show_default=True)
@click.option("--max-pattern-len", type=int, default=8, show_default=True)
@click.option("--eps", type=float, default=0.3, show_default=True)
@click.option("--min-pts", type=int, default=5, show_default=True)
@click.option("--max-iter", type=int, default=20, show_default=True)
@click.option("--min-type-count", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--binary", is_flag=True, default=False, help="Presence features instead of counts")
@click.option("--data-dir", default=None)
def analyze(dataset_id: str, data_dir: str | None, **kwargs) -> None:
    """Run the full pipeline synchronously; prints the analysis id."""
    store = _store(data_dir)
    raw = store.get("datasets", dataset_id)
    if raw is None:
        raise click.ClickException(f"unknown dataset {dataset_id}")
    try:
        config = AnalysisConfig(**kwargs)
        result = run_pipeline(raw, config)
    except CausalSeqError as exc:
        raise click.ClickException(str(exc)) from exc
    record = {
        "id": None,
        "dataset_id": dataset_id,
        "config": config.to_json(),
        "config_hash": config.config_hash(),
        "status": "done",
        "timing": {},
        "error": None,
        "result": result.to_json(),
    }
    base = content_id(f"{dataset_id}:{config.config_hash()}".encode(), "an")
    analysis_id = store.put_new("analyses", base, record)
    record["id"] = analysis_id
    store.put("analyses", analysis_id, record)
    click.echo(analysis_id)


@main.command()
@click.argument("analysis_id")
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--data-dir", default=None)
def export(analysis_id: str, out: str, data_dir: str | None) -> None:
    """Write the analysis result as canonical JSON files."""
    store = _store(data_dir)
    record = store.get("analyses", analysis_id)
    if record is None:
        raise click.ClickException(f"unknown analysis {analysis_id}")
    if record["status"] != "done":
        raise click.ClickException(f"analysis is {record['status']}, not done")
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = record["result"]
    (out_dir / "analysis.json").write_text(_canonical(result))
    (out_dir / "graphs.json").write_text(_canonical(result["states"]))
    (out_dir / "patterns.json").write_text(_canonical({"patterns": result["patterns"]}))
    click.echo(str(out_dir))


@main.command()
@click.option("--states", type=int, default=1, show_default=True)
@click.option("--nodes", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--sequences", type=int, default=100, show_default=True, help="Sequences per state")
@click.option("--length", type=int, default=10, show_default=True)
@click.option("--edge-prob", type=float, default=0.4, show_default=True)
@click.option("--p-base", type=float, default=0.05, show_default=True)
@click.option("--p-act", type=float, default=0.9, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def simulate(
    states: int,
    nodes: int,
    seed: int,
    sequences: int,
    length: int,
    edge_prob: float,
    p_base: float,
    p_act: float,
    out: str,
) -> None:
    """Generate a synthetic dataset plus its ground truth."""
    if states < 1:
        raise click.ClickException("--states must be >= 1")
    dags = [random_dag(nodes, edge_prob, seed=seed + i) for i in range(states)]
    try:
        ds, truth = sample_sequences(
            dags, sequences, length, seed=seed, p_base=p_base, p_act=p_act
        )
    except CausalSeqError as exc:
        raise click.ClickException(str(exc)) from exc
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "dataset.json").write_text(_canonical(dataset_to_json(ds)))
    (out_dir / "truth.json").write_text(_canonical(truth.to_json()))
    click.echo(str(out_dir))


@main.command()
@click.option("--truth", "truth_file", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--analysis", "analysis_id", required=True)
@click.option("--data-dir", default=None)
def score(truth_file: str, analysis_id: str, data_dir: str | None) -> None:
    """Score a finished analysis against generator ground truth."""
    store = _store(data_dir)
    record = store.get("analyses", analysis_id)
    if record is None:
        raise click.ClickException(f"unknown analysis {analysis_id}")
    if record["status"] != "done":
        raise click.ClickException(f"analysis is {record['status']}, not done")
    truth = GroundTruth.from_json(json.loads(Path(truth_file).read_text()))
    result = record["result"]
    graphs = [CausalGraph.from_json(g) for g in result["states"]["graphs"]]
    session_groups = {
        (entry["sequence"], int(entry["session"])): int(entry["group"])
        for entry in result["states"]["assignment"]
    }
    outcome: RecoveryScore = score_recovery(truth, graphs, session_groups)
    click.echo(json.dumps(outcome.to_json(), sort_keys=True))


@main.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default=None)
def serve(port: int, host: str, data_dir: str | None) -> None:
    """Run the HTTP API."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(_store(data_dir)), host=host, port=port)


if __name__ == "__main__":
    main()
