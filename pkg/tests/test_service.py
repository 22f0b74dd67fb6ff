import pytest
from fastapi.testclient import TestClient

from fsdiag.service import create_app
from fsdiag.synthetic import generate_pool, write_dataset


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    pool = generate_pool(seed=31, n_samples=100, n_learners=6, n_corrupted=1)
    path = write_dataset(pool, tmp_path_factory.mktemp("data"))
    return path, pool


@pytest.fixture
def client():
    return TestClient(create_app())


@pytest.fixture
def session_id(client, dataset):
    path, _ = dataset
    res = client.post("/api/sessions", json={"manifest_path": str(path), "seed": 1})
    assert res.status_code == 200
    sid = res.json()["session_id"]
    for k in range(6):
        r = client.post(
            f"/api/sessions/{sid}/edits",
            json={"command": {"kind": "set_learner", "learner_id": f"learner-{k:02d}", "selected": True}},
        )
        assert r.status_code == 200
    return sid


def test_health(client):
    res = client.get("/api/health")
    assert res.status_code == 200
    assert res.json() == {"status": "ok"}


def test_unknown_session_404(client):
    assert client.get("/api/sessions/deadbeef/overview").status_code == 404


def test_invalid_manifest_422(client, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    res = client.post("/api/sessions", json={"manifest_path": str(bad)})
    assert res.status_code == 422
    assert res.json()["detail"]["code"] in ("parse_error", "missing_file")


def test_create_session_returns_hex_id(client, dataset):
    path, _ = dataset
    res = client.post("/api/sessions", json={"manifest_path": str(path)})
    sid = res.json()["session_id"]
    assert len(sid) == 32
    int(sid, 16)  # parses as hex


def test_overview_payload(client, session_id):
    res = client.get(f"/api/sessions/{session_id}/overview")
    data = res.json()
    assert data["num_samples"] == 100
    assert len(data["learners"]) == 6
    entry = data["learners"][0]
    assert {"id", "selected", "weight", "fitness", "overall_diff"} <= set(entry)
    assert data["accuracy"] is not None
    assert all(l["overall_diff"] is not None for l in data["learners"] if l["selected"])


def test_edit_and_undo_round_trip(client, session_id):
    before = client.get(f"/api/sessions/{session_id}/overview").json()["state_hash"]
    res = client.post(
        f"/api/sessions/{session_id}/edits",
        json={"command": {"kind": "add_shot", "sample": 50, "class": 0}},
    )
    assert res.status_code == 200
    assert res.json()["state_hash"] != before
    res = client.post(
        f"/api/sessions/{session_id}/edits", json={"command": {"kind": "undo"}}
    )
    assert res.json()["state_hash"] == before


def test_invalid_edit_409(client, session_id):
    res = client.post(
        f"/api/sessions/{session_id}/edits",
        json={"command": {"kind": "remove_shot", "sample": 99}},
    )
    assert res.status_code == 409
    assert res.json()["detail"]["code"] == "not_a_shot"


def test_stale_hash_rejected_and_no_mutation(client, session_id):
    live = client.get(f"/api/sessions/{session_id}/overview").json()["state_hash"]
    res = client.post(
        f"/api/sessions/{session_id}/edits",
        json={
            "command": {"kind": "set_weight", "learner_id": "learner-00", "weight": 3.0},
            "state_hash": "0" * 32,
        },
    )
    assert res.status_code == 409
    assert res.json()["detail"]["code"] == "stale_state"
    after = client.get(f"/api/sessions/{session_id}/overview").json()
    assert after["state_hash"] == live
    assert after["weights" if "weights" in after else "learners"]


def test_recommend_learners_carries_seed_and_hash(client, session_id):
    res = client.post(
        f"/api/sessions/{session_id}/recommend/learners",
        json={"ratio": 1.0, "seed": 4},
    )
    assert res.status_code == 200
    data = res.json()
    assert data["seed"] == 4
    assert data["state_hash"]
    assert data["selected_learner_ids"]
    res2 = client.post(
        f"/api/sessions/{session_id}/recommend/learners",
        json={"ratio": 1.0, "seed": 4},
    )
    assert res2.json()["selected_learner_ids"] == data["selected_learner_ids"]


def test_recommend_shots_payload(client, session_id):
    res = client.post(
        f"/api/sessions/{session_id}/recommend/shots",
        json={"budget": 10, "ratio": 0.5, "seed": 2},
    )
    assert res.status_code == 200
    data = res.json()
    assert set(data["to_add"]).isdisjoint({s for s in data["to_remove"]})
    assert len(data["recommended_sample_indices"]) <= 10 + len(data["to_remove"])


def test_weight_adjust_endpoint(client, session_id):
    res = client.post(
        f"/api/sessions/{session_id}/weight-adjust",
        json={"learner_id": "learner-00", "direction": "increase", "selection": [0, 1, 2]},
    )
    assert res.status_code == 200
    data = res.json()
    assert data["objective_after"] >= data["objective_before"] - 1e-12


def test_agreement_histogram_influence_coverage(client, session_id):
    res = client.get(f"/api/sessions/{session_id}/agreement")
    assert res.status_code == 200
    assert len(res.json()["learners"]) == 6

    res = client.get(
        f"/api/sessions/{session_id}/histogram",
        params={"learner": "learner-00", "class": 0},
    )
    assert res.status_code == 200
    assert len(res.json()["learner"]) == 4
    assert len(res.json()["ensemble"]) == 4

    res = client.get(
        f"/api/sessions/{session_id}/influence", params={"learner": "learner-01"}
    )
    assert res.status_code == 200
    assert len(res.json()["deltas"]) == 100

    shots = client.get(f"/api/sessions/{session_id}/overview").json()["shots"]
    res = client.get(
        f"/api/sessions/{session_id}/coverage", params={"shot": shots[0]["sample"]}
    )
    assert res.status_code == 200
    assert res.json()["neighbors"]


def test_projection_and_clusters_and_sample(client, session_id):
    res = client.get(
        f"/api/sessions/{session_id}/projection", params={"ratio": 0.3, "seed": 1}
    )
    assert res.status_code == 200
    samples = res.json()["samples"]
    assert all({"x", "y", "class", "margin", "is_shot"} <= set(s) for s in samples)
    assert any(s["is_shot"] for s in samples)

    res = client.get(
        f"/api/sessions/{session_id}/clusters",
        params={"kind": "learners", "count": 3},
    )
    assert res.status_code == 200
    assert len(res.json()["labels"]) == 6

    res = client.get(f"/api/sessions/{session_id}/samples/3")
    assert res.status_code == 200
    data = res.json()
    assert len(data["ensemble"]) == 5
    assert len(data["per_learner"]) == 6


def test_edits_have_total_order(client, session_id):
    lengths = []
    for i in range(4):
        res = client.post(
            f"/api/sessions/{session_id}/edits",
            json={"command": {"kind": "set_weight", "learner_id": "learner-01", "weight": 1.0 + i}},
        )
        lengths.append(res.json()["log_length"])
    assert lengths == sorted(lengths)
    assert len(set(lengths)) == 4
