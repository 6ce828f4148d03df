"""HTTP API contract: status codes, payload shapes, job lifecycle, and the
no-partial-reads guarantee under concurrent access."""

from __future__ import annotations

import json
import threading
import time

import pytest
from fastapi.testclient import TestClient

from causalseq.analysis import AnalysisConfig, AnalysisResult
from causalseq.events import write_csv
from causalseq.grouping import CausalStateSet, GroupAssignment
from causalseq.patterns import SequentialPattern
from causalseq.service import create_app
from causalseq.store import Store
from causalseq.synthetic import sample_sequences

from conftest import graph_of

CSV_3_ROWS = (
    "sequence_id,timestamp,event_type\n"
    "s1,1000,login\n"
    "s1,2000,click\n"
    "s2,1500,login\n"
)


@pytest.fixture()
def api(tmp_path):
    store = Store(tmp_path)
    app = create_app(store)
    with TestClient(app) as client:
        yield client, store


def wait_for(client: TestClient, analysis_id: str, timeout: float = 60.0) -> dict:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        doc = client.get(f"/analyses/{analysis_id}").json()
        if doc.get("status") in ("done", "failed"):
            return doc
        time.sleep(0.02)
    raise AssertionError(f"analysis {analysis_id} did not finish")


def mixture_csv(n_per_state: int = 60, length: int = 10, seed: int = 0) -> str:
    a = graph_of(5, [(4, 1), (1, 0), (4, 2), (0, 2), (4, 3), (0, 3)])
    b = graph_of(5, [(2, 3), (3, 0), (2, 1), (0, 1), (2, 4), (0, 4)])
    ds, _ = sample_sequences([a, b], [n_per_state, n_per_state], length, seed)
    return write_csv(ds)


MIXTURE_CONFIG = {
    "session_interval_ms": 10_000_000,
    "alpha": 0.02,
    "eps": 0.2,
    "min_pts": 20,
    "binary": True,
    # keep mining cheap; these tests exercise plumbing, not pattern quality
    "min_support": 0.4,
    "max_pattern_len": 4,
}


# --- dataset endpoints ---


def test_csv_upload_round_trip(api) -> None:
    client, _ = api
    resp = client.post("/datasets", content=CSV_3_ROWS)
    assert resp.status_code == 200
    ds_id = resp.json()["id"]
    assert ds_id.startswith("ds-")
    doc = client.get(f"/datasets/{ds_id}").json()
    n_events = sum(len(seq["events"]) for seq in doc["sequences"])
    assert n_events == 3


def test_empty_upload_rejected(api) -> None:
    client, _ = api
    resp = client.post("/datasets", content=b"")
    assert resp.status_code == 422


def test_non_utf8_upload_rejected(api) -> None:
    client, _ = api
    resp = client.post("/datasets", content=b"\xff\xfe\x00")
    assert resp.status_code == 422


def test_bad_row_reports_row_number(api) -> None:
    client, _ = api
    bad = "sequence_id,timestamp,event_type\ns1,not-a-time,login\n"
    resp = client.post("/datasets", content=bad)
    assert resp.status_code == 422
    assert resp.json()["row"] == 1


def test_jsonl_upload_accepted(api) -> None:
    client, _ = api
    lines = (
        '{"sequence_id": "s1", "timestamp": 1000, "event_type": "a"}\n'
        '{"sequence_id": "s1", "timestamp": 2000, "event_type": "b"}\n'
    )
    resp = client.post("/datasets", content=lines)
    assert resp.status_code == 200


def test_duplicate_upload_gets_new_id(api) -> None:
    client, _ = api
    first = client.post("/datasets", content=CSV_3_ROWS).json()["id"]
    second = client.post("/datasets", content=CSV_3_ROWS).json()["id"]
    assert first != second
    assert second == f"{first}-2"


def test_same_bytes_same_base_id_in_fresh_store(api, tmp_path) -> None:
    client, _ = api
    first = client.post("/datasets", content=CSV_3_ROWS).json()["id"]
    with TestClient(create_app(Store(tmp_path / "other"))) as other:
        again = other.post("/datasets", content=CSV_3_ROWS).json()["id"]
    assert again == first


def test_unknown_dataset_404(api) -> None:
    client, _ = api
    assert client.get("/datasets/ds-missing").status_code == 404
    assert client.delete("/datasets/ds-missing").status_code == 404


def test_delete_dataset(api) -> None:
    client, _ = api
    ds_id = client.post("/datasets", content=CSV_3_ROWS).json()["id"]
    assert client.delete(f"/datasets/{ds_id}").status_code == 204
    assert client.get(f"/datasets/{ds_id}").status_code == 404


# --- analysis submission ---


def test_analysis_requires_json_body(api) -> None:
    client, _ = api
    resp = client.post("/analyses", content=b"not json")
    assert resp.status_code == 422


def test_analysis_requires_dataset_id(api) -> None:
    client, _ = api
    resp = client.post("/analyses", json={"config": {}})
    assert resp.status_code == 422


def test_analysis_unknown_dataset_404(api) -> None:
    client, _ = api
    resp = client.post(
        "/analyses",
        json={"dataset_id": "ds-missing", "config": {"session_interval_ms": 1000}},
    )
    assert resp.status_code == 404


def test_analysis_invalid_config_422(api) -> None:
    client, _ = api
    ds_id = client.post("/datasets", content=CSV_3_ROWS).json()["id"]
    for config in (
        {},  # missing interval
        {"session_interval_ms": 0},
        {"session_interval_ms": 1000, "alpha": 2.0},
        {"session_interval_ms": 1000, "no_such_knob": 1},
    ):
        resp = client.post(
            "/analyses", json={"dataset_id": ds_id, "config": config}
        )
        assert resp.status_code == 422, config


def test_unknown_analysis_404(api) -> None:
    client, _ = api
    assert client.get("/analyses/an-missing").status_code == 404
    assert client.get("/analyses/an-missing/graphs").status_code == 404
    assert client.get("/analyses/an-missing/graphs/0/patterns").status_code == 404
    assert client.get("/analyses/an-missing/graphs/0/patterns/0/flow").status_code == 404
    assert client.get("/analyses/an-missing/sequences").status_code == 404


def test_not_done_analysis_409(api) -> None:
    client, store = api
    record = {
        "id": "an-queued",
        "dataset_id": "ds-x",
        "config": {},
        "config_hash": "0" * 16,
        "status": "queued",
        "timing": {},
        "error": None,
        "result": None,
    }
    store.put("analyses", "an-queued", record)
    for path in (
        "/analyses/an-queued/graphs",
        "/analyses/an-queued/graphs/0/patterns",
        "/analyses/an-queued/graphs/0/patterns/0/flow",
        "/analyses/an-queued/sequences",
    ):
        assert client.get(path).status_code == 409, path


# --- read endpoints over a crafted finished analysis ---


def seeded_analysis(store: Store) -> str:
    """Store a done analysis with three graphs over nodes {0,1,2}:
    counts (5, 3, 4)  ->  count-sorted order [0, 2, 1];
    edge (0,1) present in graphs 0 and 2 only."""
    config = AnalysisConfig(session_interval_ms=1000)
    graphs = (
        graph_of(3, [(0, 1)]),
        graph_of(3, [(1, 2)]),
        graph_of(3, [(0, 1), (1, 2)]),
    )
    sessions = {(f"s{i}", 0): g for i, g in enumerate([0] * 5 + [1] * 3 + [2] * 4)}
    states = CausalStateSet(
        graphs=graphs,
        assignment=GroupAssignment(groups=sessions, counts=(5, 3, 4)),
        iterations=2,
        converged=True,
    )
    patterns = (
        (
            SequentialPattern((0,), support=1.0, count=5),
            SequentialPattern((0, 1), support=0.6, count=3),
            SequentialPattern((2,), support=0.4, count=2),
        ),
        (SequentialPattern((1,), support=1.0, count=3),),
        (SequentialPattern((1, 2), support=0.5, count=2),),
    )
    glyphs = tuple(
        tuple({"frequency": 0.0, "quarter_dist": [0, 0, 0, 0], "type_color": t}
              for t in range(3))
        for _ in range(3)
    )
    columns = tuple({str(v): v for v in range(3)} for _ in range(3))
    result = AnalysisResult(
        config=config,
        states=states,
        patterns=patterns,
        glyphs=glyphs,
        columns=columns,
        sequence_assignment={"s0": 0, "s1": 0, "s2": 1},
    )
    record = {
        "id": "an-seeded",
        "dataset_id": "ds-seeded",
        "config": config.to_json(),
        "config_hash": config.config_hash(),
        "status": "done",
        "timing": {},
        "error": None,
        "result": result.to_json(),
    }
    store.put("analyses", "an-seeded", record)
    return "an-seeded"


def test_graphs_sorted_by_count(api) -> None:
    client, store = api
    an = seeded_analysis(store)
    doc = client.get(f"/analyses/{an}/graphs").json()
    assert [g["index"] for g in doc["graphs"]] == [0, 2, 1]
    assert [g["count"] for g in doc["graphs"]] == [5, 4, 3]
    for entry in doc["graphs"]:
        assert set(entry) == {"index", "graph", "count", "columns", "glyphs"}
    assert doc["converged"] is True
    assert doc["iterations"] == 2


def test_edge_query_lists_containing_graphs(api) -> None:
    client, store = api
    an = seeded_analysis(store)
    doc = client.get(f"/analyses/{an}/graphs", params={"edge": "0,1"}).json()
    assert doc == {"graphs": [0, 2]}
    doc = client.get(f"/analyses/{an}/graphs", params={"edge": "2,0"}).json()
    assert doc == {"graphs": []}


def test_edge_query_malformed_422(api) -> None:
    client, store = api
    an = seeded_analysis(store)
    resp = client.get(f"/analyses/{an}/graphs", params={"edge": "a,b"})
    assert resp.status_code == 422


def test_patterns_listing_has_stable_ids(api) -> None:
    client, store = api
    an = seeded_analysis(store)
    doc = client.get(f"/analyses/{an}/graphs/0/patterns").json()
    assert [p["id"] for p in doc["patterns"]] == ["g0-p0", "g0-p1", "g0-p2"]
    assert [p["events"] for p in doc["patterns"]] == [[0], [0, 1], [2]]
    assert doc["patterns"][1]["support"] == 0.6


def test_patterns_unknown_group_404(api) -> None:
    client, store = api
    an = seeded_analysis(store)
    assert client.get(f"/analyses/{an}/graphs/9/patterns").status_code == 404


def test_patterns_target_root_restricts_to_root(api) -> None:
    client, store = api
    an = seeded_analysis(store)
    # ancestors of node 0 in graph 0 (edge 0->1) is just {0}
    doc = client.get(
        f"/analyses/{an}/graphs/0/patterns", params={"target": "0"}
    ).json()
    assert [p["events"] for p in doc["patterns"]] == [[0]]


def test_patterns_target_pulls_in_ancestors(api) -> None:
    client, store = api
    an = seeded_analysis(store)
    doc = client.get(
        f"/analyses/{an}/graphs/0/patterns", params={"target": "1"}
    ).json()
    # ancestors of 1 are {0, 1}; the (2,) pattern falls outside
    assert [p["events"] for p in doc["patterns"]] == [[0], [0, 1]]


def test_patterns_subgraph_filter(api) -> None:
    client, store = api
    an = seeded_analysis(store)
    doc = client.get(
        f"/analyses/{an}/graphs/0/patterns", params={"subgraph": "0,1"}
    ).json()
    assert [p["events"] for p in doc["patterns"]] == [[0], [0, 1]]
    doc = client.get(
        f"/analyses/{an}/graphs/0/patterns", params={"subgraph": "2"}
    ).json()
    assert [p["events"] for p in doc["patterns"]] == [[2]]


def test_patterns_subgraph_validation(api) -> None:
    client, store = api
    an = seeded_analysis(store)
    assert (
        client.get(f"/analyses/{an}/graphs/0/patterns", params={"subgraph": "x"})
        .status_code
        == 422
    )
    assert (
        client.get(f"/analyses/{an}/graphs/0/patterns", params={"subgraph": "7"})
        .status_code
        == 422
    )
    assert (
        client.get(f"/analyses/{an}/graphs/0/patterns", params={"target": "7"})
        .status_code
        == 422
    )


def test_flow_endpoint_shape(api) -> None:
    client, store = api
    an = seeded_analysis(store)
    doc = client.get(f"/analyses/{an}/graphs/0/patterns/1/flow").json()
    assert {n["event"] for n in doc["nodes"]} == {0, 1}
    rank = {n["event"]: n["rank"] for n in doc["nodes"]}
    assert rank[0] < rank[1]
    assert doc["flows"] == [{"src": 0, "dst": 1, "slot": 0}]


def test_flow_unknown_pattern_404(api) -> None:
    client, store = api
    an = seeded_analysis(store)
    assert (
        client.get(f"/analyses/{an}/graphs/0/patterns/9/flow").status_code == 404
    )
    assert (
        client.get(f"/analyses/{an}/graphs/9/patterns/0/flow").status_code == 404
    )


def test_flow_responses_are_byte_identical(api) -> None:
    client, store = api
    an = seeded_analysis(store)
    first = client.get(f"/analyses/{an}/graphs/2/patterns/0/flow")
    second = client.get(f"/analyses/{an}/graphs/2/patterns/0/flow")
    assert first.content == second.content


def seeded_dataset(store: Store) -> None:
    from causalseq.events import Dataset, Event, EventCatalog, EventSequence

    catalog = EventCatalog(types=("a", "b", "c"))
    seqs = (
        EventSequence("s0", (Event(0, 1000), Event(1, 2000))),
        EventSequence("s1", (Event(0, 1000), Event(2, 2000))),
        EventSequence("s2", (Event(1, 1000),)),
    )
    from causalseq.events import dataset_to_json

    store.put("datasets", "ds-seeded", dataset_to_json(Dataset(catalog, seqs)))


def test_sequences_listing_and_pattern_filter(api) -> None:
    client, store = api
    an = seeded_analysis(store)
    seeded_dataset(store)
    doc = client.get(f"/analyses/{an}/sequences").json()
    assert doc == {"ids": ["s0", "s1", "s2"]}
    # pattern g0-p1 = (0, 1); only s0 among group-0 sequences matches
    doc = client.get(
        f"/analyses/{an}/sequences", params={"pattern": "g0-p1"}
    ).json()
    assert doc == {"ids": ["s0"]}


def test_sequences_pattern_validation(api) -> None:
    client, store = api
    an = seeded_analysis(store)
    seeded_dataset(store)
    assert (
        client.get(f"/analyses/{an}/sequences", params={"pattern": "nope"})
        .status_code
        == 422
    )
    assert (
        client.get(f"/analyses/{an}/sequences", params={"pattern": "g9-p0"})
        .status_code
        == 404
    )


def test_sequences_after_dataset_deleted_404(api) -> None:
    client, store = api
    an = seeded_analysis(store)
    assert client.get(f"/analyses/{an}/sequences").status_code == 404


# --- job lifecycle over the real pipeline ---


def test_two_state_analysis_completes(api) -> None:
    client, _ = api
    ds_id = client.post("/datasets", content=mixture_csv()).json()["id"]
    an_id = client.post(
        "/analyses", json={"dataset_id": ds_id, "config": MIXTURE_CONFIG}
    ).json()["id"]
    doc = wait_for(client, an_id)
    assert doc["status"] == "done"
    assert doc["error"] is None
    assert set(doc["timing"]) == {"queued_at", "started_at", "finished_at"}
    result = doc["result"]
    assert set(result) == {
        "columns",
        "config",
        "config_hash",
        "glyphs",
        "patterns",
        "sequence_assignment",
        "states",
    }
    n_graphs = len(result["states"]["graphs"])
    assert 1 <= n_graphs <= 2
    assert len(result["patterns"]) == n_graphs
    assert len(result["glyphs"]) == n_graphs
    assert len(result["columns"]) == n_graphs
    graphs_doc = client.get(f"/analyses/{an_id}/graphs").json()
    assert len(graphs_doc["graphs"]) == n_graphs


def test_max_iter_zero_reports_unconverged(api) -> None:
    client, _ = api
    ds_id = client.post("/datasets", content=mixture_csv()).json()["id"]
    config = dict(MIXTURE_CONFIG, max_iter=0)
    an_id = client.post(
        "/analyses", json={"dataset_id": ds_id, "config": config}
    ).json()["id"]
    doc = wait_for(client, an_id)
    assert doc["status"] == "done"
    assert doc["result"]["states"]["converged"] is False
    graphs_doc = client.get(f"/analyses/{an_id}/graphs").json()
    assert graphs_doc["converged"] is False


def test_same_input_same_payload(api) -> None:
    client, _ = api
    ds_id = client.post("/datasets", content=mixture_csv()).json()["id"]
    body = {"dataset_id": ds_id, "config": MIXTURE_CONFIG}
    first_id = client.post("/analyses", json=body).json()["id"]
    second_id = client.post("/analyses", json=body).json()["id"]
    assert first_id != second_id
    first = wait_for(client, first_id)
    second = wait_for(client, second_id)
    assert first["status"] == second["status"] == "done"
    canon = lambda doc: json.dumps(doc["result"], sort_keys=True)  # noqa: E731
    assert canon(first) == canon(second)


def test_dataset_deleted_mid_run_fails(api, monkeypatch) -> None:
    client, _ = api
    import causalseq.service as service_mod

    release = threading.Event()

    class StubResult:
        def to_json(self) -> dict:
            return {"stub": True}

    def slow_pipeline(raw, config):
        release.wait(timeout=10.0)
        return StubResult()

    monkeypatch.setattr(service_mod, "run_pipeline", slow_pipeline)
    ds_id = client.post("/datasets", content=CSV_3_ROWS).json()["id"]
    an_id = client.post(
        "/analyses",
        json={"dataset_id": ds_id, "config": {"session_interval_ms": 1000}},
    ).json()["id"]
    deadline = time.monotonic() + 10.0
    while client.get(f"/analyses/{an_id}").json()["status"] != "running":
        assert time.monotonic() < deadline
        time.sleep(0.01)
    assert client.delete(f"/datasets/{ds_id}").status_code == 204
    release.set()
    doc = wait_for(client, an_id)
    assert doc["status"] == "failed"
    assert "deleted" in doc["error"]
    assert doc["result"] is None
    # a failed analysis never exposes graphs
    assert client.get(f"/analyses/{an_id}/graphs").status_code == 409


def test_concurrent_readers_never_see_partial_state(api) -> None:
    client, _ = api
    ds_id = client.post("/datasets", content=mixture_csv()).json()["id"]
    an_id = client.post(
        "/analyses", json={"dataset_id": ds_id, "config": MIXTURE_CONFIG}
    ).json()["id"]

    finished = threading.Event()
    violations: list[str] = []

    def reader() -> None:
        while not finished.is_set():
            doc = client.get(f"/analyses/{an_id}").json()
            status = doc.get("status")
            if status not in ("queued", "running", "done", "failed"):
                violations.append(f"bad status {status!r}")
                return
            if status == "done" and not doc["result"]["states"]["graphs"]:
                violations.append("done without graphs")
                return
            if status in ("queued", "running") and doc["result"] is not None:
                violations.append(f"{status} with result attached")
                return
            resp = client.get(f"/analyses/{an_id}/graphs")
            if resp.status_code == 409:
                continue
            if resp.status_code != 200:
                violations.append(f"graphs status {resp.status_code}")
                return
            payload = resp.json()
            if "converged" not in payload or not payload["graphs"]:
                violations.append("incomplete graphs payload")
                return
            for entry in payload["graphs"]:
                if set(entry) != {"index", "graph", "count", "columns", "glyphs"}:
                    violations.append("partial graph entry")
                    return

    threads = [threading.Thread(target=reader) for _ in range(16)]
    for t in threads:
        t.start()
    try:
        doc = wait_for(client, an_id)
    finally:
        finished.set()
        for t in threads:
            t.join(timeout=10.0)
    assert doc["status"] == "done"
    assert not violations, violations
