"""Regenerates the frontend's mocked API fixture from live endpoint responses.

The frontend test suite replays these exact request/response pairs, so the
mock can only ever say what the real service said. Rerunning this test
rewrites ``frontend/fixtures/api_fixture.json``; the pipeline is
deterministic, so the bytes only change when the contract changes.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi.testclient import TestClient

from causalseq.service import create_app
from causalseq.store import Store

from test_service import MIXTURE_CONFIG, mixture_csv, wait_for

FIXTURE_PATH = Path(__file__).resolve().parent.parent / "frontend" / "fixtures" / "api_fixture.json"


def _capture(client: TestClient, url: str) -> dict:
    resp = client.get(url)
    return {"url": url, "status": resp.status_code, "body": resp.json()}


def _build_fixture(tmp_path: Path) -> dict:
    store = Store(tmp_path)
    with TestClient(create_app(store)) as client:
        csv_body = mixture_csv(150, 14, 0)
        ds_id = client.post("/datasets", content=csv_body).json()["id"]
        an_id = client.post(
            "/analyses", json={"dataset_id": ds_id, "config": MIXTURE_CONFIG}
        ).json()["id"]
        record = wait_for(client, an_id)
        assert record["status"] == "done", record.get("error")

        responses = [_capture(client, f"/datasets/{ds_id}")]

        analysis = _capture(client, f"/analyses/{an_id}")
        # wall-clock noise would churn the fixture bytes on every run
        analysis["body"]["timing"] = {"queued_at": 0, "started_at": 0, "finished_at": 0}
        responses.append(analysis)

        graphs = _capture(client, f"/analyses/{an_id}/graphs")
        responses.append(graphs)
        cards = graphs["body"]["graphs"]

        seen = set()
        for card in cards:
            for e in card["graph"]["edges"][:2]:
                key = (e["src"], e["dst"])
                if key not in seen:
                    seen.add(key)
                    responses.append(
                        _capture(client, f"/analyses/{an_id}/graphs?edge={e['src']},{e['dst']}")
                    )
        responses.append(_capture(client, f"/analyses/{an_id}/graphs?edge=0,0"))

        for card in cards:
            g = card["index"]
            plist = _capture(client, f"/analyses/{an_id}/graphs/{g}/patterns")
            responses.append(plist)
            edges = card["graph"]["edges"]
            if edges:
                first = edges[0]
                pair = f"{first['src']},{first['dst']}"
                responses.append(
                    _capture(client, f"/analyses/{an_id}/graphs/{g}/patterns?subgraph={pair}")
                )
                all_nodes = ",".join(str(n["id"]) for n in card["graph"]["nodes"])
                responses.append(
                    _capture(client, f"/analyses/{an_id}/graphs/{g}/patterns?subgraph={all_nodes}")
                )
                responses.append(
                    _capture(client, f"/analyses/{an_id}/graphs/{g}/patterns?target={first['dst']}")
                )
            for p in plist["body"]["patterns"][:3]:
                responses.append(
                    _capture(client, f"/analyses/{an_id}/graphs/{g}/patterns/{p['index']}/flow")
                )
            longest = max(plist["body"]["patterns"], key=lambda p: (len(p["events"]), p["index"]))
            responses.append(
                _capture(client, f"/analyses/{an_id}/graphs/{g}/patterns/{longest['index']}/flow")
            )
            responses.append(
                _capture(client, f"/analyses/{an_id}/sequences?pattern={longest['id']}")
            )

        responses.append(_capture(client, f"/analyses/{an_id}/sequences"))
        responses.append(_capture(client, f"/analyses/{an_id}/sequences?pattern=g0-p0"))
        responses.append(_capture(client, f"/analyses/{an_id}/graphs/99/patterns"))
        responses.append(_capture(client, "/analyses/an-missing"))
        responses.append(_capture(client, "/analyses/an-missing/graphs"))

    unique = {}
    for entry in responses:
        unique[entry["url"]] = entry
    return {
        "analysis_id": an_id,
        "dataset_id": ds_id,
        "responses": sorted(unique.values(), key=lambda e: e["url"]),
    }


def test_fixture_regenerates_deterministically(tmp_path) -> None:
    first = _build_fixture(tmp_path / "a")
    second = _build_fixture(tmp_path / "b")
    text_a = json.dumps(first, sort_keys=True, indent=1)
    assert text_a == json.dumps(second, sort_keys=True, indent=1)

    by_url = {e["url"]: e for e in first["responses"]}
    graphs = by_url[f"/analyses/{first['analysis_id']}/graphs"]["body"]["graphs"]
    assert len(graphs) >= 2, "fixture needs several detected states for hover coverage"
    with_edges = [card for card in graphs if card["graph"]["edges"]]
    assert len(with_edges) >= 2, "fixture needs at least two graphs with edges"
    for card in graphs:
        patterns = by_url[
            f"/analyses/{first['analysis_id']}/graphs/{card['index']}/patterns"
        ]["body"]["patterns"]
        assert patterns, "fixture groups must have mined patterns"

    FIXTURE_PATH.parent.mkdir(parents=True, exist_ok=True)
    FIXTURE_PATH.write_text(text_a + "\n")
