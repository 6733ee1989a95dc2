import pytest
from fastapi.testclient import TestClient

from conftest import E, N
from factgpt.gateway import GatewayError, MockProvider
from factgpt.matcher import MatcherConfig, make_pair_id
from factgpt.records import (
    Claim,
    GoldLabel,
    PairCandidate,
    Post,
    Prediction,
    decode_records,
    encode_records,
)
from factgpt.service import create_app
from factgpt.store import Store

FIG_TWEET = "omg my dad got vaccinated yesterday and I just connected him to bluetooth"
FIG_CLAIM = "Vaccininated people emit Bluetooth signals."

CLAIM_BODIES = [
    {"text": FIG_CLAIM, "source": "factcheck.example"},
    {"text": "Drinking hot water cures the virus."},
]


@pytest.fixture
def store(tmp_path):
    return Store(tmp_path / "store")


@pytest.fixture
def client(store):
    app = create_app(store, MockProvider(), MatcherConfig(), classify_model="mock-cls")
    return TestClient(app, raise_server_exceptions=False)


def seed_queue(store, n, with_predictions=True):
    claim = Claim(id="cq", text=FIG_CLAIM)
    store.upsert_claims([claim])
    for i in range(n):
        post = Post(id=f"p{i:02d}", text=f"post number {i} about bluetooth vaccines")
        store.add_post(post)
        pair = PairCandidate(
            pair_id=make_pair_id(post.id, claim.id),
            post_id=post.id,
            claim_id=claim.id,
            token_score=0.5,
            semantic_score=0.5,
            combined_score=(n - i) / n,
        )
        prediction = (
            Prediction(pair.pair_id, "mock-cls", E, "ENTAILMENT") if with_predictions else None
        )
        store.add_pair(pair, prediction)
    return [p for p in store.pairs]


# -- claims -------------------------------------------------------------------


def test_ingest_two_new_claims(client):
    response = client.post("/v1/claims", json=CLAIM_BODIES)
    assert response.status_code == 200
    assert response.json() == {"ingested": 2, "skipped_duplicates": 0}


def test_ingest_is_idempotent(client):
    client.post("/v1/claims", json=CLAIM_BODIES)
    second = client.post("/v1/claims", json=CLAIM_BODIES)
    assert second.json() == {"ingested": 0, "skipped_duplicates": 2}


def test_ingest_empty_text_names_offending_index(client):
    response = client.post("/v1/claims", json=[{"text": "fine"}, {"text": "   "}])
    assert response.status_code == 400
    body = response.json()
    assert body["code"] == "invalid_claims"
    assert body["detail"][0]["index"] == 1


# -- match ----------------------------------------------------------------


def test_match_empty_store_conflict(client):
    response = client.post("/v1/match", json={"post_text": FIG_TWEET})
    assert response.status_code == 409
    assert response.json()["code"] == "empty_claim_store"


def test_match_top_k_one(client):
    client.post("/v1/claims", json=CLAIM_BODIES)
    response = client.post("/v1/match", json={"post_text": FIG_TWEET, "top_k": 1})
    assert response.status_code == 200
    candidates = response.json()["candidates"]
    assert len(candidates) == 1
    assert "label" not in candidates[0]  # classify defaults to false
    assert candidates[0]["claim"]["text"] == FIG_CLAIM  # token overlap dominates


def test_match_with_classification_is_deterministic(client):
    client.post("/v1/claims", json=CLAIM_BODIES)
    body = {"post_text": FIG_TWEET, "top_k": 2, "classify": True}
    first = client.post("/v1/match", json=body).json()
    second = client.post("/v1/match", json=body).json()
    assert first == second
    assert all(c["label"] in ("ENTAILMENT", "NEUTRAL", "CONTRADICTION", None) for c in first["candidates"])


def test_match_provider_failure_returns_502_with_candidates(store):
    class DeadProvider(MockProvider):
        def chat(self, messages, config):
            raise GatewayError("provider down")

    app = create_app(store, DeadProvider(), MatcherConfig())
    client = TestClient(app, raise_server_exceptions=False)
    client.post("/v1/claims", json=CLAIM_BODIES)
    response = client.post("/v1/match", json={"post_text": FIG_TWEET, "classify": True})
    assert response.status_code == 502
    body = response.json()
    assert body["code"] == "provider_error"
    candidates = body["detail"]["candidates"]
    assert len(candidates) == 1
    assert all(c["label"] is None for c in candidates)


def test_match_validates_request(client):
    client.post("/v1/claims", json=CLAIM_BODIES)
    assert client.post("/v1/match", json={"post_text": "  "}).status_code == 400
    assert client.post("/v1/match", json={"post_text": "x", "top_k": 0}).status_code == 400


# -- review queue ---------------------------------------------------------


def test_queue_initially_all_pending(client, store):
    seed_queue(store, 3)
    response = client.get("/v1/review/queue")
    items = response.json()["items"]
    assert len(items) == 3
    assert all(item["status"] == "pending" for item in items)


def test_queue_ordered_by_combined_score_desc(client, store):
    seed_queue(store, 5)
    items = client.get("/v1/review/queue").json()["items"]
    scores = [item["scores"]["combined_score"] for item in items]
    assert scores == sorted(scores, reverse=True)


def test_queue_pagination(client, store):
    seed_queue(store, 12)
    first = client.get("/v1/review/queue", params={"limit": 10}).json()
    assert len(first["items"]) == 10
    assert first["next_cursor"] is not None
    second = client.get("/v1/review/queue", params={"limit": 10, "cursor": first["next_cursor"]}).json()
    assert len(second["items"]) == 2
    assert second["next_cursor"] is None
    seen = {i["pair_id"] for i in first["items"]} | {i["pair_id"] for i in second["items"]}
    assert len(seen) == 12


def test_queue_bad_pagination(client, store):
    seed_queue(store, 2)
    assert client.get("/v1/review/queue", params={"limit": 0}).status_code == 400
    assert client.get("/v1/review/queue", params={"limit": 10, "cursor": "x"}).status_code == 400
    assert client.get("/v1/review/queue", params={"status": "weird"}).status_code == 400


def test_confirm_removes_from_pending_and_sets_gold(client, store):
    pair_ids = seed_queue(store, 2)
    response = client.post(
        f"/v1/review/{pair_ids[0]}", json={"decision": "confirm", "reviewer": "alice"}
    )
    assert response.status_code == 200
    assert response.json()["status"] == "confirmed"
    pending = client.get("/v1/review/queue").json()["items"]
    assert pair_ids[0] not in {item["pair_id"] for item in pending}
    gold = store.export_gold_labels()
    assert gold == [GoldLabel(pair_ids[0], decided=E)]


def test_override_sets_reviewer_label(client, store):
    pair_ids = seed_queue(store, 1)
    response = client.post(
        f"/v1/review/{pair_ids[0]}",
        json={"decision": "override", "label": "NEUTRAL", "reviewer": "bob"},
    )
    assert response.json()["status"] == "overridden"
    assert store.export_gold_labels() == [GoldLabel(pair_ids[0], decided=N)]


def test_override_requires_label(client, store):
    pair_ids = seed_queue(store, 1)
    response = client.post(f"/v1/review/{pair_ids[0]}", json={"decision": "override", "reviewer": "bob"})
    assert response.status_code == 400


def test_unknown_pair_404(client, store):
    seed_queue(store, 1)
    response = client.post("/v1/review/nope", json={"decision": "confirm", "reviewer": "a"})
    assert response.status_code == 404


def test_second_submit_conflicts_unless_forced(client, store):
    pair_ids = seed_queue(store, 1)
    body = {"decision": "confirm", "reviewer": "alice"}
    assert client.post(f"/v1/review/{pair_ids[0]}", json=body).status_code == 200
    conflict = client.post(f"/v1/review/{pair_ids[0]}", json=body)
    assert conflict.status_code == 409
    assert conflict.json()["detail"]["item"]["status"] == "confirmed"
    forced = client.post(
        f"/v1/review/{pair_ids[0]}",
        json={"decision": "override", "label": "CONTRADICTION", "reviewer": "carol", "force": True},
    )
    assert forced.status_code == 200
    assert forced.json()["status"] == "overridden"


def test_adjudications_survive_reload(client, store, tmp_path):
    pair_ids = seed_queue(store, 2)
    client.post(f"/v1/review/{pair_ids[0]}", json={"decision": "confirm", "reviewer": "alice"})
    reloaded = Store(store.root)
    assert reloaded.status_of(pair_ids[0]) == "confirmed"
    assert reloaded.status_of(pair_ids[1]) == "pending"
    assert len(reloaded.export_gold_labels()) == 1


def test_push_to_queue_endpoint(client, store):
    client.post("/v1/claims", json=CLAIM_BODIES)
    claim_id = next(iter(store.claims))
    response = client.post(
        "/v1/review/queue",
        json={"post_text": "new bluetooth panic post", "claim_id": claim_id, "classify": True},
    )
    assert response.status_code == 200
    item = response.json()
    assert item["status"] == "pending"
    assert item["prediction"]["label"] in ("ENTAILMENT", "NEUTRAL", "CONTRADICTION")
    assert item["pair_id"] in store.pairs
    missing = client.post("/v1/review/queue", json={"post_text": "x", "claim_id": "ghost"})
    assert missing.status_code == 404


# -- reports / ui-config ----------------------------------------------------


def test_reports_latest_404_before_any_run(client):
    assert client.get("/v1/reports/latest").status_code == 404


def test_reports_latest_returns_most_recent(client, store):
    store.save_report({"model": "m1", "report": {"accuracy": 0.5}, "manifest": {}})
    store.save_report({"model": "m2", "report": {"accuracy": 0.7}, "manifest": {}})
    body = client.get("/v1/reports/latest").json()
    assert body["model"] == "m2"


def test_ui_config(client):
    assert client.get("/v1/ui-config").json() == {"api_base": ""}


def test_cors_headers_present(client):
    response = client.get("/v1/ui-config", headers={"Origin": "http://localhost:5173"})
    assert response.headers.get("access-control-allow-origin") in ("*", "http://localhost:5173")


# -- store-level behaviors ---------------------------------------------------


def test_store_roundtrips_jsonl_files(tmp_path):
    store = Store(tmp_path / "s")
    seed_queue(store, 2)
    raw = (store.root / "pairs.jsonl").read_text()
    records, errors = decode_records(raw, PairCandidate)
    assert errors == []
    assert len(records) == 2


def test_store_upsert_updates_changed_claim(tmp_path):
    store = Store(tmp_path / "s")
    store.upsert_claims([Claim(id="c1", text="old text")])
    ingested, skipped = store.upsert_claims([Claim(id="c1", text="new text")])
    assert (ingested, skipped) == (1, 0)
    assert Store(store.root).claims["c1"].text == "new text"
