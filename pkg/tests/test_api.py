"""
Tests for the coopreg HTTP API, served in-process
"""

import json

import pytest
from fastapi.testclient import TestClient

from tests.conftest import negative
from app.main import app


@pytest.fixture(scope="module")
def api_client():
    with TestClient(app) as client:
        yield client


def _inline(name: str) -> dict:
    return json.loads(negative(name).read_text())


class TestHealth:

    def test_health(self, api_client):
        response = api_client.get("/health")
        assert response.status_code == 200
        data = response.json()
        assert data["status"] == "healthy"
        assert data["config"]["scenarios_available"] == 7

    def test_ping_and_alias(self, api_client):
        assert api_client.get("/ping").json()["status"] == "ok"
        assert api_client.get("/v1/ping").status_code == 200

    def test_config(self, api_client):
        data = api_client.get("/config").json()
        assert data["simulation"]["step"] == 1e-3
        assert "harmonic_chain" in data["scenarios"]["available"]

    def test_aliases_hidden_from_schema(self, api_client):
        paths = api_client.get("/openapi.json").json()["paths"]
        assert "/run" in paths
        assert "/simulate" not in paths


class TestScenarios:

    def test_list(self, api_client):
        data = api_client.get("/scenarios").json()
        assert "harmonic_chain" in data["scenarios"]
        assert api_client.get("/fixtures").json() == data

    def test_get(self, api_client):
        data = api_client.get("/scenarios/harmonic_chain").json()
        assert len(data["agents"]) == 4

    def test_unknown(self, api_client):
        response = api_client.get("/scenarios/nope")
        assert response.status_code == 404
        assert response.json()["error"]["type"] == "not_found"


class TestCheck:

    def test_fixture(self, api_client):
        data = api_client.post("/check", json={"fixture": "harmonic_chain"}).json()
        assert data["ok"] is True
        assert data["scenario"] == "harmonic_chain"
        assert "✓ all required checks passed" in data["text"]

    def test_inline_rank_failure(self, api_client):
        data = api_client.post("/check", json={"scenario": _inline("rank_failure")}).json()
        assert data["ok"] is False
        assert "rank-condition" in data["failures"]

    def test_unknown_fixture(self, api_client):
        assert api_client.post("/check", json={"fixture": "nope"}).status_code == 404

    def test_needs_one_source(self, api_client):
        response = api_client.post("/check", json={})
        assert response.status_code == 422
        assert response.json()["error"]["type"] == "scenario_parse_error"

    def test_path_like_fixture_rejected(self, api_client):
        assert api_client.post("/check", json={"fixture": "../secrets"}).status_code == 422

    def test_unknown_scenario_field(self, api_client):
        doc = {**_inline("flip_scalar"), "bogus": 1}
        assert api_client.post("/check", json={"scenario": doc}).status_code == 422


class TestSynth:

    def test_fixture(self, api_client):
        data = api_client.post("/synth", json={"fixture": "harmonic_chain"}).json()
        assert data["gains"]["kind"] == "distributed_measurement"
        assert data["manifest"]["provenance"]["observer_rule"] == "riccati-static"
        assert "sha256" in data["manifest"]["inputs"]["scenario"]

    def test_synthesis_failure(self, api_client):
        response = api_client.post("/synth", json={"scenario": _inline("rank_failure")})
        assert response.status_code == 400
        assert response.json()["error"]["type"] == "synthesis_error"


class TestRun:

    def test_fixture_converges(self, api_client):
        response = api_client.post("/run", json={"fixture": "harmonic_chain", "step": 0.01})
        assert response.status_code == 200
        data = response.json()
        assert data["exit_code"] == 0
        assert data["diverged"] is False
        assert data["samples"] == 3001
        assert data["metrics"]["converged"] is True
        assert data["csv"] is None

    def test_flipped_feedback_reports_divergence(self, api_client):
        body = {"scenario": _inline("flip_scalar"), "flip_k1": True}
        data = api_client.post("/run", json=body).json()
        assert data["diverged"] is True
        assert data["exit_code"] == 3
        assert data["metrics"] is None
        assert data["divergence"]["time"] > 20.0

    def test_csv_in_response(self, api_client):
        body = {"fixture": "local_exo", "horizon": 0.5, "step": 0.1, "include_csv": True}
        data = api_client.post("/run", json=body).json()
        assert data["csv"].startswith("t,agent,")

    def test_zero_horizon(self, api_client):
        response = api_client.post("/run", json={"fixture": "harmonic_chain", "horizon": 0.0})
        assert response.status_code == 422
        assert response.json()["error"]["type"] == "dimension_error"

    def test_negative_step_rejected(self, api_client):
        assert api_client.post("/run", json={"fixture": "harmonic_chain", "step": -1.0}).status_code == 422


class TestSweep:

    def test_step_grid(self, api_client):
        body = {"fixture": "local_exo", "horizon": 1.0, "steps": [0.1, 0.05]}
        data = api_client.post("/sweep", json=body).json()
        assert [row["step"] for row in data["rows"]] == [0.1, 0.05]

    def test_needs_a_grid(self, api_client):
        response = api_client.post("/sweep", json={"fixture": "local_exo"})
        assert response.status_code == 422
        assert "sweep needs" in response.json()["error"]["message"]

    def test_negative_mu_rejected(self, api_client):
        assert api_client.post("/sweep", json={"fixture": "local_exo", "mus": [-1.0]}).status_code == 422


class TestStatus:

    def test_idle_after_requests(self, api_client):
        api_client.post("/check", json={"fixture": "local_exo"})
        data = api_client.get("/status", params={"include_history": True, "include_stats": True}).json()
        assert data["is_processing"] is False
        assert data["run_history"][0]["command"] == "check"
        assert data["statistics"]["runs_by_command"]["check"] >= 1

    def test_failed_run_is_recorded(self, api_client):
        api_client.post("/synth", json={"scenario": _inline("rank_failure")})
        latest = api_client.get("/status/history", params={"limit": 1}).json()["run_history"][0]
        assert latest["command"] == "synth"
        assert latest["phase"] == "error"

    def test_clear_needs_confirmation(self, api_client):
        assert "success" not in api_client.post("/status/history/clear").json()
        assert api_client.post("/status/history/clear", params={"confirm": True}).json()["success"] is True
        assert api_client.get("/status/history").json()["total_records"] == 0

    def test_run_progress_is_recorded(self, api_client):
        api_client.post("/run", json={"fixture": "harmonic_chain", "horizon": 2.0, "step": 0.01})
        latest = api_client.get("/status/history", params={"limit": 1}).json()["run_history"][0]
        assert latest["command"] == "run"
        assert latest["progress"]["steps_total"] == 200
        assert latest["progress"]["steps_done"] == 200
        assert latest["progress"]["progress_percentage"] == 100.0
