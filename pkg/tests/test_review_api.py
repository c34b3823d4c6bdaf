"""Review HTTP API: paging, decisions, conflict codes, crash durability."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from adaptlex.config import load_config
from adaptlex.server import create_app

VECTORS = """\
hate 1.0 0.0
despise 0.9 0.2
loathe 0.6 0.8
scorn 0.95 0.1
pizza 0.0 1.0
"""


def make_workspace(root: Path) -> Path:
    (root / "vectors.txt").write_text(VECTORS, encoding="utf-8")
    (root / "corpus.jsonl").write_text(
        json.dumps({"id": "c1", "text": "I despise this despise that"}) + "\n" +
        json.dumps({"id": "c2", "text": "plain pizza post"}) + "\n",
        encoding="utf-8")
    (root / "artifacts").mkdir()
    lexicon = {
        "version": 1,
        "thresholds": [{"generation": 1, "threshold": 0.75}],
        "entries": [
            {"term": "hate", "status": "seed", "source": "seeds", "generation": 0},
            {"term": "despise", "status": "candidate", "source": "expansion",
             "generation": 1,
             "evidence": {"seed": "hate", "similarity": 0.976187}},
            {"term": "scorn", "status": "candidate", "source": "expansion",
             "generation": 1,
             "evidence": {"seed": "hate", "similarity": 0.99}},
        ],
    }
    (root / "artifacts/lexicon.json").write_text(json.dumps(lexicon), encoding="utf-8")
    config = {
        "paths": {
            "embeddings": "vectors.txt",
            "corpus": "corpus.jsonl",
            "lexicon": "artifacts/lexicon.json",
            "artifacts_dir": "artifacts",
            "decision_log": "artifacts/decisions.jsonl",
        },
        "corpus_format": {"format": "jsonl", "label_field": None},
        "service": {"example_cap": 3, "page_size": 10},
    }
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(config), encoding="utf-8")
    return cfg_path


@pytest.fixture
def workspace(tmp_path):
    return make_workspace(tmp_path)


def client_for(cfg_path) -> TestClient:
    return TestClient(create_app(load_config(cfg_path)))


class TestCandidates:
    def test_queue_sorted_by_similarity(self, workspace):
        client = client_for(workspace)
        doc = client.get("/candidates").json()
        assert doc["total"] == 2
        assert [i["term"] for i in doc["items"]] == ["scorn", "despise"]

    def test_paging(self, workspace):
        client = client_for(workspace)
        page1 = client.get("/candidates?page=1&page_size=1").json()
        page2 = client.get("/candidates?page=2&page_size=1").json()
        assert page1["items"][0]["term"] == "scorn"
        assert page2["items"][0]["term"] == "despise"
        assert page1["total"] == page2["total"] == 2

    def test_generation_filter(self, workspace):
        client = client_for(workspace)
        assert client.get("/candidates?generation=1").json()["total"] == 2
        assert client.get("/candidates?generation=9").json()["total"] == 0

    def test_evidence_neighbors_examples(self, workspace):
        client = client_for(workspace)
        items = {i["term"]: i for i in client.get("/candidates").json()["items"]}
        despise = items["despise"]
        assert despise["evidence"]["seed"] == "hate"
        assert any(n["token"] == "hate" for n in despise["neighbors"])
        assert despise["examples"][0]["id"] == "c1"
        assert despise["examples"][0]["token"] == "despise"


class TestDecisions:
    def test_accept_updates_counts(self, workspace):
        client = client_for(workspace)
        before = client.get("/lexicon").json()["counts"]
        resp = client.post("/decisions", json={"term": "despise",
                                               "decision": "accept",
                                               "reviewer": "rev"})
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["entry"]["status"] == "accepted"
        assert doc["counts"]["updated"] == before["updated"] + 1

    def test_reject(self, workspace):
        client = client_for(workspace)
        resp = client.post("/decisions", json={"term": "scorn",
                                               "decision": "reject",
                                               "reviewer": "rev"})
        assert resp.status_code == 200
        assert resp.json()["entry"]["status"] == "rejected"

    def test_unknown_term_404(self, workspace):
        client = client_for(workspace)
        resp = client.post("/decisions", json={"term": "ghost",
                                               "decision": "accept",
                                               "reviewer": "rev"})
        assert resp.status_code == 404

    def test_seed_term_409(self, workspace):
        client = client_for(workspace)
        resp = client.post("/decisions", json={"term": "hate",
                                               "decision": "accept",
                                               "reviewer": "rev"})
        assert resp.status_code == 409
        assert resp.json()["status"] == "seed"

    def test_contradiction_409(self, workspace):
        client = client_for(workspace)
        client.post("/decisions", json={"term": "despise", "decision": "accept",
                                        "reviewer": "rev"})
        resp = client.post("/decisions", json={"term": "despise",
                                               "decision": "reject",
                                               "reviewer": "rev"})
        assert resp.status_code == 409

    def test_idempotent_repeat_logs_twice(self, workspace, tmp_path):
        client = client_for(workspace)
        body = {"term": "despise", "decision": "accept", "reviewer": "rev"}
        assert client.post("/decisions", json=body).status_code == 200
        assert client.post("/decisions", json=body).status_code == 200
        log = (tmp_path / "artifacts/decisions.jsonl").read_text().splitlines()
        assert len(log) == 2
        stats = client.get("/stats").json()
        assert stats["accepted"] == 1

    def test_malformed_body_400(self, workspace):
        client = client_for(workspace)
        assert client.post("/decisions", json={"nonsense": 1}).status_code == 400
        assert client.post("/decisions",
                           json={"term": "despise", "decision": "maybe",
                                 "reviewer": "r"}).status_code == 400


class TestDurability:
    def test_decision_survives_restart(self, workspace):
        client = client_for(workspace)
        assert client.post("/decisions",
                           json={"term": "despise", "decision": "accept",
                                 "reviewer": "rev"}).status_code == 200
        assert client.post("/decisions",
                           json={"term": "scorn", "decision": "reject",
                                 "reviewer": "rev"}).status_code == 200
        # fresh process: new app instance over the same files
        client2 = client_for(workspace)
        doc = client2.get("/lexicon?include_terms=true").json()
        statuses = {e["term"]: e["status"] for e in doc["entries"]}
        assert statuses["despise"] == "accepted"
        assert statuses["scorn"] == "rejected"

    def test_log_replay_covers_crash_before_lexicon_save(self, workspace, tmp_path):
        # simulate: log written, lexicon.json never updated
        client = client_for(workspace)
        client.post("/decisions", json={"term": "despise", "decision": "accept",
                                        "reviewer": "rev"})
        lexicon_path = tmp_path / "artifacts/lexicon.json"
        stale = json.loads(lexicon_path.read_text())
        for e in stale["entries"]:
            if e["term"] == "despise":
                e["status"] = "candidate"
        lexicon_path.write_text(json.dumps(stale))
        client2 = client_for(workspace)
        doc = client2.get("/lexicon?include_terms=true").json()
        statuses = {e["term"]: e["status"] for e in doc["entries"]}
        assert statuses["despise"] == "accepted"


class TestStatsAndExpansion:
    def test_stats_shape(self, workspace):
        client = client_for(workspace)
        stats = client.get("/stats").json()
        assert stats["pending"] == 2
        assert stats["seed"] == 1
        assert stats["max_generation"] == 1
        assert stats["thresholds"] == [{"generation": 1, "threshold": 0.75}]

    def test_expand_endpoint_runs_next_generation(self, workspace):
        client = client_for(workspace)
        client.post("/decisions", json={"term": "despise", "decision": "accept",
                                        "reviewer": "rev"})
        resp = client.post("/expand")
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["generation"] == 2
        # despise accepted -> loathe reachable at 0.7593 >= 0.75
        pending = client.get("/candidates?generation=2").json()
        assert "loathe" in [i["term"] for i in pending["items"]]
