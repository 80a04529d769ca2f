"""HTTP API: contracts, error codes, concurrency guard, persistence."""
import json

import pytest
from fastapi.testclient import TestClient

from boxlens import data as datamod
from boxlens.data import ClassSignal
from boxlens.service import create_app


def _corpus(name="toy", n=120, seed=6):
    signal = ClassSignal(
        presence={"uppos": (0.05, 0.9), "downneg": (0.9, 0.05)}
    )
    corpus = datamod.synth_corpus(n, 30, 0.5, signal, seed=seed, name=name)
    return corpus


@pytest.fixture()
def client(tmp_path):
    app = create_app(tmp_path, default_n=400)
    app.state.store.register_corpus(_corpus())
    return TestClient(app)


def _train(client, kind="logreg", seed=0):
    resp = client.post(
        "/api/models", json={"dataset": "toy", "kind": kind, "seed": seed}
    )
    assert resp.status_code == 200
    return resp.json()


class TestDatasets:
    def test_listing(self, client):
        resp = client.get("/api/datasets")
        assert resp.status_code == 200
        rows = resp.json()
        assert rows == [{"name": "toy", "n_docs": 120, "d_prime": rows[0]["d_prime"]}]
        assert rows[0]["d_prime"] > 0


class TestTrain:
    def test_metrics_and_idempotent_id(self, client):
        a = _train(client)
        b = _train(client)
        assert a["model_id"] == b["model_id"]
        assert a["weights_hash"] == b["weights_hash"]
        assert 0.5 <= a["metrics"]["heldout_acc"] <= 1.0

    def test_different_seed_different_id(self, client):
        a = _train(client, seed=0)
        b = _train(client, seed=1)
        assert a["model_id"] != b["model_id"]

    def test_unknown_kind(self, client):
        resp = client.post(
            "/api/models", json={"dataset": "toy", "kind": "svm"}
        )
        assert resp.status_code == 422

    def test_unknown_dataset(self, client):
        resp = client.post(
            "/api/models", json={"dataset": "nope", "kind": "logreg"}
        )
        assert resp.status_code == 404


class TestExplain:
    def test_by_index_deterministic(self, client):
        mid = _train(client)["model_id"]
        body = {"instance_index": 3, "k": 5, "n": 300, "seed": 4}
        a = client.post(f"/api/models/{mid}/explain", json=body)
        b = client.post(f"/api/models/{mid}/explain", json=body)
        assert a.status_code == 200
        assert a.json() == b.json()
        assert len(a.json()["features"]) <= 5

    def test_adhoc_text(self, client):
        mid = _train(client)["model_id"]
        resp = client.post(
            f"/api/models/{mid}/explain",
            json={"text": "uppos uppos", "k": 3, "n": 200},
        )
        assert resp.status_code == 200
        assert resp.json()["instance_id"] == "adhoc"

    def test_out_of_vocab_text(self, client):
        mid = _train(client)["model_id"]
        resp = client.post(
            f"/api/models/{mid}/explain", json={"text": "zzz qqq"}
        )
        assert resp.status_code == 422

    def test_index_out_of_range(self, client):
        mid = _train(client)["model_id"]
        resp = client.post(
            f"/api/models/{mid}/explain", json={"instance_index": 9999}
        )
        assert resp.status_code == 404

    def test_missing_target(self, client):
        mid = _train(client)["model_id"]
        resp = client.post(f"/api/models/{mid}/explain", json={})
        assert resp.status_code == 422

    def test_unknown_model(self, client):
        resp = client.post(
            "/api/models/m-doesnotexist/explain", json={"instance_index": 0}
        )
        assert resp.status_code == 404


class TestPick:
    def test_trace_and_selection(self, client):
        mid = _train(client)["model_id"]
        resp = client.post(
            f"/api/models/{mid}/pick",
            json={"instance_indices": list(range(8)), "B": 3, "k": 4, "n": 200},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["selected"]) == 3
        assert set(body["selected"]) <= set(range(8))
        trace = body["coverage_trace"]
        assert all(b >= a - 1e-9 for a, b in zip(trace, trace[1:]))
        assert len(body["explanations"]) == 3

    def test_empty_instances(self, client):
        mid = _train(client)["model_id"]
        resp = client.post(
            f"/api/models/{mid}/pick", json={"instance_indices": [], "B": 2}
        )
        assert resp.status_code == 422

    def test_bad_budget(self, client):
        mid = _train(client)["model_id"]
        resp = client.post(
            f"/api/models/{mid}/pick", json={"instance_indices": [0, 1], "B": 0}
        )
        assert resp.status_code == 422


def _create_session(client, B=4, k=4):
    resp = client.post(
        "/api/sessions",
        json={
            "dataset": "toy",
            "model_spec": {"kind": "logreg", "seed": 0},
            "B": B,
            "k": k,
            "seed": 0,
        },
    )
    assert resp.status_code == 200
    return resp.json()


class TestSessions:
    def test_initial_round(self, client):
        sess = _create_session(client)
        assert len(sess["rounds"]) == 1
        r0 = sess["rounds"][0]
        assert r0["index"] == 0
        assert r0["removed_words_cumulative"] == []
        assert len(r0["picked"]) <= 4
        for exp in r0["picked"]:
            assert len(exp["features"]) <= 4

    def test_round_accumulates_and_removes(self, client):
        sess = _create_session(client)
        sid = sess["id"]
        r1 = client.post(
            f"/api/sessions/{sid}/rounds", json={"remove_words": ["uppos"]}
        )
        assert r1.status_code == 200
        body = r1.json()
        assert body["index"] == 1
        assert body["removed_words_cumulative"] == ["uppos"]
        for exp in body["picked"]:
            assert "uppos" not in {f["token"] for f in exp["features"]}
        r2 = client.post(
            f"/api/sessions/{sid}/rounds", json={"remove_words": ["downneg"]}
        )
        assert sorted(r2.json()["removed_words_cumulative"]) == [
            "downneg", "uppos",
        ]

    def test_unknown_word(self, client):
        sid = _create_session(client)["id"]
        resp = client.post(
            f"/api/sessions/{sid}/rounds", json={"remove_words": ["zzz"]}
        )
        assert resp.status_code == 422

    def test_unknown_session(self, client):
        resp = client.post(
            "/api/sessions/sess-999/rounds", json={"remove_words": []}
        )
        assert resp.status_code == 404

    def test_get_reflects_rounds(self, client):
        sid = _create_session(client)["id"]
        client.post(f"/api/sessions/{sid}/rounds", json={"remove_words": ["uppos"]})
        got = client.get(f"/api/sessions/{sid}")
        assert got.status_code == 200
        assert len(got.json()["rounds"]) == 2

    def test_conflict_while_locked(self, client):
        sid = _create_session(client)["id"]
        state = client.app.state.store.sessions[sid]
        state.lock.acquire()
        try:
            resp = client.post(
                f"/api/sessions/{sid}/rounds", json={"remove_words": ["uppos"]}
            )
            assert resp.status_code == 409
        finally:
            state.lock.release()
        # once released, the same request succeeds
        ok = client.post(
            f"/api/sessions/{sid}/rounds", json={"remove_words": ["uppos"]}
        )
        assert ok.status_code == 200


class TestPersistence:
    def test_restart_round_trip(self, tmp_path):
        app = create_app(tmp_path, default_n=300)
        app.state.store.register_corpus(_corpus())
        client = TestClient(app)
        mid = _train(client)["model_id"]
        sid = _create_session(client, B=3, k=3)["id"]
        client.post(f"/api/sessions/{sid}/rounds", json={"remove_words": ["uppos"]})
        before_model = client.post(
            f"/api/models/{mid}/explain",
            json={"instance_index": 1, "k": 3, "n": 200, "seed": 0},
        ).json()
        before_session = client.get(f"/api/sessions/{sid}").json()

        app2 = create_app(tmp_path, default_n=300)
        client2 = TestClient(app2)
        after_model = client2.post(
            f"/api/models/{mid}/explain",
            json={"instance_index": 1, "k": 3, "n": 200, "seed": 0},
        ).json()
        after_session = client2.get(f"/api/sessions/{sid}").json()
        assert after_model == before_model
        assert after_session == before_session
        # new sessions keep numbering past the reloaded ones
        new_sid = _create_session(client2)["id"]
        assert new_sid != sid

    def test_model_file_is_json(self, tmp_path):
        app = create_app(tmp_path, default_n=300)
        app.state.store.register_corpus(_corpus())
        client = TestClient(app)
        mid = _train(client, kind="random_forest")["model_id"]
        path = tmp_path / "models" / f"{mid}.json"
        with open(path) as fh:
            doc = json.load(fh)
        assert doc["model_id"] == mid
