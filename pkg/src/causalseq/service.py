"""HTTP JSON API over the pipeline.

Analyses run on a bounded worker pool; jobs touching the same dataset queue
behind each other. Records persist through atomic file writes, so a reader
sees either the previous complete state or the new one, never a torn write.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor

from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse

from .analysis import AnalysisConfig, run_pipeline
from .errors import CausalSeqError, ConfigError, RowParseError
from .events import dataset_to_json, parse_events, read_csv, read_jsonl
from .graph import CausalGraph
from .layout import FlowConfig, flow_layout
from .patterns import SequentialPattern, Subgraph, ancestors_subgraph, explained_by, match_sequences
from .store import Store, content_id

__all__ = ["create_app"]

MAX_WORKERS = 4


def _parse_upload(body: bytes) -> dict:
    text = body.decode("utf-8")
    if not text.strip():
        raise RowParseError(0, "empty upload")
    head = text.lstrip()[:1]
    records = read_jsonl(text) if head == "{" else read_csv(text)
    return dataset_to_json(parse_events(records))


class _Jobs:
    """Per-dataset FIFO queues drained on a shared bounded pool."""

    def __init__(self) -> None:
        self.pool = ThreadPoolExecutor(max_workers=MAX_WORKERS)
        self._queues: dict[str, list] = {}
        self._draining: set[str] = set()
        self._guard = threading.Lock()

    def submit(self, dataset_id: str, fn) -> None:
        with self._guard:
            self._queues.setdefault(dataset_id, []).append(fn)
            if dataset_id in self._draining:
                return
            self._draining.add(dataset_id)
        self.pool.submit(self._drain, dataset_id)

    def _drain(self, dataset_id: str) -> None:
        while True:
            with self._guard:
                queue = self._queues[dataset_id]
                if not queue:
                    self._draining.discard(dataset_id)
                    return
                fn = queue.pop(0)
            try:
                fn()
            except Exception:  # noqa: BLE001 - jobs record their own failures
                pass


def create_app(store: Store | None = None) -> FastAPI:
    app = FastAPI(title="causalseq")
    app.state.store = store or Store()
    app.state.jobs = _Jobs()

    def _error(status: int, message: str, **extra) -> JSONResponse:
        return JSONResponse(status_code=status, content={"error": message, **extra})

    @app.exception_handler(CausalSeqError)
    def _domain_error(request: Request, exc: CausalSeqError):
        return _error(422, str(exc))

    @app.post("/datasets")
    async def create_dataset(request: Request):
        body = await request.body()
        try:
            doc = _parse_upload(body)
        except RowParseError as exc:
            return _error(422, str(exc), row=exc.row)
        except CausalSeqError as exc:
            return _error(422, str(exc))
        except UnicodeDecodeError:
            return _error(422, "upload is not valid UTF-8")
        base = content_id(body, "ds")
        item_id = request.app.state.store.put_new("datasets", base, doc)
        return {"id": item_id}

    @app.get("/datasets/{dataset_id}")
    def get_dataset(dataset_id: str, request: Request):
        doc = request.app.state.store.get("datasets", dataset_id)
        if doc is None:
            return _error(404, f"unknown dataset {dataset_id}")
        return doc

    @app.delete("/datasets/{dataset_id}")
    def delete_dataset(dataset_id: str, request: Request):
        if not request.app.state.store.delete("datasets", dataset_id):
            return _error(404, f"unknown dataset {dataset_id}")
        return Response(status_code=204)

    @app.post("/analyses")
    async def create_analysis(request: Request):
        store: Store = request.app.state.store
        try:
            payload = await request.json()
        except Exception:
            return _error(422, "body must be JSON")
        if not isinstance(payload, dict) or "dataset_id" not in payload:
            return _error(422, "body must carry dataset_id")
        dataset_id = payload["dataset_id"]
        dataset = store.get("datasets", dataset_id)
        if dataset is None:
            return _error(404, f"unknown dataset {dataset_id}")
        try:
            config = AnalysisConfig.from_json(payload.get("config", {}))
        except (ConfigError, TypeError) as exc:
            return _error(422, str(exc))

        base = content_id(
            f"{dataset_id}:{config.config_hash()}".encode(), "an"
        )
        record = {
            "id": None,
            "dataset_id": dataset_id,
            "config": config.to_json(),
            "config_hash": config.config_hash(),
            "status": "queued",
            "timing": {"queued_at": time.time()},
            "error": None,
            "result": None,
        }
        analysis_id = store.put_new("analyses", base, record)
        record["id"] = analysis_id
        store.put("analyses", analysis_id, record)

        def job() -> None:
            rec = store.get("analyses", analysis_id)
            rec["status"] = "running"
            rec["timing"]["started_at"] = time.time()
            store.put("analyses", analysis_id, rec)
            try:
                raw = store.get("datasets", dataset_id)
                if raw is None:
                    raise CausalSeqError(f"dataset {dataset_id} deleted")
                result = run_pipeline(raw, config)
                if store.get("datasets", dataset_id) is None:
                    raise CausalSeqError(f"dataset {dataset_id} deleted")
                rec["result"] = result.to_json()
                rec["status"] = "done"
            except Exception as exc:  # noqa: BLE001 - failure is a stored outcome
                rec["status"] = "failed"
                rec["error"] = str(exc)
            rec["timing"]["finished_at"] = time.time()
            store.put("analyses", analysis_id, rec)

        request.app.state.jobs.submit(dataset_id, job)
        return {"id": analysis_id}

    def _done_record(request: Request, analysis_id: str):
        doc = request.app.state.store.get("analyses", analysis_id)
        if doc is None:
            return None, _error(404, f"unknown analysis {analysis_id}")
        if doc["status"] != "done":
            return None, _error(
                409, f"analysis {analysis_id} is {doc['status']}, not done"
            )
        return doc, None

    @app.get("/analyses/{analysis_id}")
    def get_analysis(analysis_id: str, request: Request):
        doc = request.app.state.store.get("analyses", analysis_id)
        if doc is None:
            return _error(404, f"unknown analysis {analysis_id}")
        return doc

    @app.get("/analyses/{analysis_id}/graphs")
    def get_graphs(
        analysis_id: str,
        request: Request,
        edge: str | None = Query(default=None),
    ):
        doc, err = _done_record(request, analysis_id)
        if err:
            return err
        result = doc["result"]
        graphs = result["states"]["graphs"]
        counts = result["states"]["counts"]
        if edge is not None:
            try:
                src, dst = (int(part) for part in edge.split(","))
            except ValueError:
                return _error(422, "edge must be 'src,dst' integers")
            hits = [
                g
                for g, graph in enumerate(graphs)
                if any(e["src"] == src and e["dst"] == dst for e in graph["edges"])
            ]
            return {"graphs": hits}
        order = sorted(range(len(graphs)), key=lambda g: (-counts[g], g))
        return {
            "graphs": [
                {
                    "index": g,
                    "graph": graphs[g],
                    "count": counts[g],
                    "columns": result["columns"][g],
                    "glyphs": result["glyphs"][g],
                }
                for g in order
            ],
            "converged": result["states"]["converged"],
            "iterations": result["states"]["iterations"],
        }

    def _group_patterns(doc: dict, group: int) -> list[dict] | None:
        patterns = doc["result"]["patterns"]
        if not 0 <= group < len(patterns):
            return None
        return patterns[group]

    @app.get("/analyses/{analysis_id}/graphs/{group}/patterns")
    def get_patterns(
        analysis_id: str,
        group: int,
        request: Request,
        subgraph: str | None = Query(default=None),
        target: int | None = Query(default=None),
    ):
        doc, err = _done_record(request, analysis_id)
        if err:
            return err
        patterns = _group_patterns(doc, group)
        if patterns is None:
            return _error(404, f"unknown group {group}")
        graph = CausalGraph.from_json(doc["result"]["states"]["graphs"][group])

        sub: Subgraph | None = None
        if subgraph is not None:
            try:
                nodes = frozenset(int(part) for part in subgraph.split(","))
            except ValueError:
                return _error(422, "subgraph must be comma-separated node ids")
            if any(not 0 <= v < graph.n_nodes for v in nodes):
                return _error(422, "subgraph node outside graph")
            sub = Subgraph(
                nodes=nodes,
                edges=tuple(
                    e for e in graph.edges if e.src in nodes and e.dst in nodes
                ),
            )
        if target is not None:
            if not 0 <= target < graph.n_nodes:
                return _error(422, f"target {target} outside graph")
            anc = ancestors_subgraph(graph, target)
            if sub is not None:
                nodes = sub.nodes & anc.nodes
                sub = Subgraph(
                    nodes=nodes,
                    edges=tuple(
                        e
                        for e in anc.edges
                        if e.src in nodes and e.dst in nodes
                    ),
                )
            else:
                sub = anc

        out = []
        for idx, p in enumerate(patterns):
            if sub is not None and not explained_by(
                SequentialPattern.from_json(p), sub
            ):
                continue
            out.append({"id": f"g{group}-p{idx}", "index": idx, **p})
        return {"patterns": out}

    @app.get("/analyses/{analysis_id}/graphs/{group}/patterns/{index}/flow")
    def get_flow(analysis_id: str, group: int, index: int, request: Request):
        doc, err = _done_record(request, analysis_id)
        if err:
            return err
        patterns = _group_patterns(doc, group)
        if patterns is None:
            return _error(404, f"unknown group {group}")
        if not 0 <= index < len(patterns):
            return _error(404, f"unknown pattern {index}")
        graph = CausalGraph.from_json(doc["result"]["states"]["graphs"][group])
        pattern = SequentialPattern.from_json(patterns[index])
        layout = flow_layout(pattern, graph, FlowConfig())
        return layout.to_json()

    @app.get("/analyses/{analysis_id}/sequences")
    def get_sequences(
        analysis_id: str,
        request: Request,
        pattern: str | None = Query(default=None),
    ):
        doc, err = _done_record(request, analysis_id)
        if err:
            return err
        store: Store = request.app.state.store
        dataset = store.get("datasets", doc["dataset_id"])
        if dataset is None:
            return _error(404, f"dataset {doc['dataset_id']} deleted")
        from .events import dataset_from_json

        ds = dataset_from_json(dataset)
        assignment = doc["result"]["sequence_assignment"]
        if pattern is None:
            return {"ids": [seq.id for seq in ds.sequences]}
        try:
            group_s, index_s = pattern.removeprefix("g").split("-p")
            group, index = int(group_s), int(index_s)
        except ValueError:
            return _error(422, "pattern must look like g<group>-p<index>")
        patterns = _group_patterns(doc, group)
        if patterns is None or not 0 <= index < len(patterns):
            return _error(404, f"unknown pattern {pattern}")
        spec_pattern = SequentialPattern.from_json(patterns[index])
        members = [
            seq for seq in ds.sequences if assignment.get(seq.id) == group
        ]
        return {"ids": match_sequences(spec_pattern, members)}

    return app
