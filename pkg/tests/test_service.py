import pytest
from fastapi.testclient import TestClient

from cnotmin import nnet
from cnotmin.service import app

from conftest import FIG2_MATRIX, FIG3_MATRIX

client = TestClient(app)


def test_health():
    r = client.get("/health")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok" and "version" in body


def test_topologies_listing():
    r = client.get("/topologies")
    assert r.status_code == 200
    assert "4-L" in r.json()["builtin"]
    r = client.get("/topologies/5-T")
    assert r.status_code == 200
    body = r.json()
    assert body["n"] == 5 and body["num_actions"] == 8
    assert client.get("/topologies/9-Q").status_code == 404


def test_parity_endpoint_fig2():
    gates = [
        {"control": 0, "target": 1},
        {"control": 2, "target": 3},
        {"control": 5, "target": 4},
        {"control": 1, "target": 0},
        {"control": 2, "target": 5},
        {"control": 0, "target": 5},
        {"control": 5, "target": 1},
    ]
    r = client.post("/parity", json={"n": 6, "gates": gates})
    assert r.status_code == 200
    assert r.json()["matrix"] == FIG2_MATRIX


def test_parity_rejects_bad_gate():
    r = client.post("/parity", json={"n": 3, "gates": [{"control": 0, "target": 0}]})
    assert r.status_code == 400


def test_verify_endpoint():
    gates = [
        {"control": 0, "target": 1},
        {"control": 1, "target": 2},
        {"control": 2, "target": 1},
    ]
    r = client.post("/verify", json={"matrix": FIG3_MATRIX, "gates": gates})
    assert r.status_code == 200 and r.json()["valid"] is True
    r = client.post("/verify", json={"matrix": FIG3_MATRIX, "gates": gates[:2]})
    assert r.json()["valid"] is False


@pytest.mark.parametrize("method", ["gauss", "pmh", "exact"])
def test_synthesize_methods(method):
    r = client.post("/synthesize", json={"matrix": FIG3_MATRIX, "method": method})
    assert r.status_code == 200
    body = r.json()
    assert body["verified"] is True
    assert body["gate_count"] == len(body["gates"])
    if method == "exact":
        assert body["gate_count"] == 3


def test_synthesize_constrained_greedy():
    r = client.post(
        "/synthesize",
        json={"matrix": FIG3_MATRIX, "method": "greedy", "topology": {"name": "4-L"}},
    )
    # 3-qubit matrix against a 4-qubit topology is an input error
    assert r.status_code == 400
    r = client.post(
        "/synthesize",
        json={
            "matrix": FIG3_MATRIX,
            "method": "greedy",
            "topology": {"n": 3, "edges": [[0, 1], [1, 2]]},
        },
    )
    assert r.status_code == 200
    assert r.json()["verified"] is True


def test_synthesize_rejects_singular_and_unknown():
    singular = [[1, 0, 0], [0, 1, 0], [1, 1, 0]]
    r = client.post("/synthesize", json={"matrix": singular, "method": "gauss"})
    assert r.status_code == 400
    r = client.post("/synthesize", json={"matrix": FIG3_MATRIX, "method": "magic"})
    assert r.status_code == 400
    r = client.post("/synthesize", json={"matrix": FIG3_MATRIX, "method": "greedy"})
    assert r.status_code == 400  # topology missing
    r = client.post("/synthesize", json={"matrix": FIG3_MATRIX, "method": "mcts"})
    assert r.status_code == 400  # model missing


def test_exact_endpoint_constrained():
    r = client.post(
        "/exact",
        json={"matrix": FIG3_MATRIX, "topology": {"name": "4-L"}},
    )
    assert r.status_code == 400  # size mismatch is rejected cleanly

    r = client.post("/exact", json={"matrix": FIG3_MATRIX})
    assert r.status_code == 200
    body = r.json()
    assert body["gate_count"] == 3
    assert body["nodes_expanded"] >= 0


def test_mcts_via_model_checkpoint(tmp_path):
    cfg = nnet.NetConfig(input_dim=9, action_dim=6, hidden_width=16, depth=2)
    params = nnet.init_params(cfg, seed=0)
    path = tmp_path / "m.ckpt"
    nnet.save_checkpoint(path, params, cfg)
    r = client.post(
        "/synthesize",
        json={
            "matrix": FIG3_MATRIX,
            "method": "mcts",
            "model_path": str(path),
            "simulations": 256,
            "shots": 2,
        },
    )
    assert r.status_code == 200
    assert r.json()["verified"] is True
