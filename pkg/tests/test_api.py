# tests/test_api.py
import pytest
from fastapi.testclient import TestClient

from kincal.main import app


@pytest.fixture
def client():
    return TestClient(app)


@pytest.fixture
def small_payload(shipped_data):
    payload = dict(shipped_data)
    payload.update(iterations=4, candidate_count=100)
    return payload


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"
    assert response.json()["project"] == "kincal"


def test_kernel_check(client):
    response = client.post("/api/v1/kernels/check", json={"seed": 0})
    assert response.status_code == 200
    report = response.json()
    assert report["passed"] is True
    assert report["naive_failure_detected"] is True
    assert {round(c["beta"]) for c in report["example"]} == {1, 12}


def test_run_experiment(client, small_payload):
    response = client.post("/api/v1/experiments/run?mode=bo&seed=3", json=small_payload)
    assert response.status_code == 200
    summaries = response.json()["summaries"]
    assert list(summaries) == ["bo"]
    assert summaries["bo"]["iterations"] == 4
    assert summaries["bo"]["seed"] == 3
    assert len(summaries["bo"]["objectives"]) == 4


def test_invalid_config_returns_422(client, small_payload):
    small_payload["weights"] = {"alpha": [0.5, 0.4]}
    response = client.post("/api/v1/experiments/run", json=small_payload)
    assert response.status_code == 422
    body = response.json()
    assert body["error"] == "config_validation"
    assert body["details"][0]["field"] == "weights.alpha"
