"""Triage service HTTP API: listing, decisions, stats, persistence."""

import json

import pytest
from fastapi.testclient import TestClient

from tailqa.filtering import load_ledger
from tailqa.kg import Catalog, Entity, Property
from tailqa.sampling import Candidate
from tailqa.service import TriageState, create_app


@pytest.fixture()
def state(tmp_path):
    catalog = Catalog(
        entities={
            "Q1": Entity("Q1", "Barack Obama"),
            "Q2": Entity("Q2", "Obama"),
            "Q3": Entity("Q3", "Lovelyz"),
            "Q4": Entity("Q4", "Seoul"),
        },
        properties={
            "P1": Property("P1", "official website"),
            "P2": Property("P2", "location of formation"),
            "P3": Property("P3", "spouse"),
        },
    )
    candidates = [
        Candidate("Q1", "P1", "https://example.org", "literal", "fine"),
        Candidate("Q3", "P2", "Q4", "entity", "fine"),
        Candidate("Q1", "P2", "Q4", "entity", "fine"),
        Candidate("Q3", "P3", "Q1", "entity", "fine"),
    ]
    return TriageState(catalog=catalog, candidates=candidates,
                       ledger_path=tmp_path / "ledger.jsonl", seed=5)


@pytest.fixture()
def client(state):
    return TestClient(create_app(state))


def test_fresh_run_everything_pending(client):
    stats = client.get("/api/stats").json()
    assert stats["pending"] == stats["total"] == 3
    assert stats["kept"] == stats["rejected"] == 0


def test_listing_order_and_cards(client):
    resp = client.get("/api/properties", params={"status": "pending"})
    assert resp.status_code == 200
    body = resp.json()
    # descending triplet count, property id breaks the tie
    assert [c["property_id"] for c in body["items"]] == ["P2", "P1", "P3"]
    website = next(c for c in body["items"] if c["property_id"] == "P1")
    assert website["suggestion"]["verdict"] == "reject"
    assert "url_media" in website["suggestion"]["fired_rules"]
    assert website["samples"][0]["subject"] == "Barack Obama"
    location = next(c for c in body["items"] if c["property_id"] == "P2")
    assert "what is the location of formation of lovelyz?" in location["preview_questions"]


def test_pagination(client):
    body = client.get("/api/properties",
                      params={"status": "pending", "page_size": 2}).json()
    assert body["page_count"] == 2
    assert len(body["items"]) == 2
    page2 = client.get("/api/properties",
                       params={"status": "pending", "page": 2, "page_size": 2}).json()
    assert len(page2["items"]) == 1


def test_bad_queries_rejected(client):
    assert client.get("/api/properties", params={"status": "nope"}).status_code == 400
    assert client.get("/api/properties", params={"page": 0}).status_code == 400
    assert client.get("/api/properties", params={"page_size": -1}).status_code == 400


def test_decision_roundtrip_and_persistence(client, state):
    resp = client.post("/api/properties/P1/decision",
                       json={"verdict": "reject", "reason": "URL property"})
    assert resp.status_code == 200
    assert resp.json()["status"] == "rejected"
    assert resp.json()["effective_verdict"] == "reject"

    # read-your-writes
    stats = client.get("/api/stats").json()
    assert stats["rejected"] == 1
    assert stats["pending"] == 2
    pending = client.get("/api/properties", params={"status": "pending"}).json()
    assert all(c["property_id"] != "P1" for c in pending["items"])
    rejected = client.get("/api/properties", params={"status": "rejected"}).json()
    assert [c["property_id"] for c in rejected["items"]] == ["P1"]

    # persisted in the append-only ledger file the CLI reads
    rows = [json.loads(ln) for ln in
            state.ledger_path.read_text(encoding="utf-8").splitlines()]
    assert rows == [{"property_id": "P1", "verdict": "reject",
                     "reason": "URL property", "source": "human", "ts": rows[0]["ts"]}]
    replayed = load_ledger(state.ledger_path)
    assert replayed.effective("P1").decision == "reject"
    assert replayed.effective("P1").source == "human"


def test_human_keep_overrides_heuristic_reject(client):
    resp = client.post("/api/properties/P1/decision",
                       json={"verdict": "keep", "reason": ""})
    assert resp.status_code == 200
    assert resp.json()["status"] == "kept"
    card = client.get("/api/properties", params={"status": "kept"}).json()["items"][0]
    assert card["suggestion"]["verdict"] == "reject"  # suggestion stays visible
    assert card["effective_verdict"] == "keep"


def test_unknown_property_404(client):
    resp = client.post("/api/properties/P99/decision",
                       json={"verdict": "keep", "reason": ""})
    assert resp.status_code == 404


def test_reject_without_reason_422(client):
    resp = client.post("/api/properties/P1/decision",
                       json={"verdict": "reject", "reason": "  "})
    assert resp.status_code == 422
    resp = client.post("/api/properties/P1/decision",
                       json={"verdict": "maybe", "reason": "x"})
    assert resp.status_code == 422


def test_stats_sum_invariant(client):
    client.post("/api/properties/P1/decision", json={"verdict": "reject", "reason": "r"})
    client.post("/api/properties/P2/decision", json={"verdict": "keep", "reason": ""})
    stats = client.get("/api/stats").json()
    assert stats["pending"] + stats["kept"] + stats["rejected"] == stats["total"]
    assert stats["triplets"]["rejected"] == 1
    assert stats["triplets"]["kept"] == 2


def test_reload_reconstructs_queue(state, tmp_path):
    client = TestClient(create_app(state))
    client.post("/api/properties/P1/decision", json={"verdict": "reject", "reason": "r"})
    before = client.get("/api/properties", params={"status": "pending"}).json()

    # a fresh service instance over the same ledger file sees the same queue
    fresh = TriageState(catalog=state.catalog, candidates=state.candidates,
                        ledger_path=state.ledger_path, seed=5)
    client2 = TestClient(create_app(fresh))
    after = client2.get("/api/properties", params={"status": "pending"}).json()
    assert before == after
