"""
Tests for scenario files, gains files, manifests and trajectory CSV
"""

import csv
import io
import json

import numpy as np
import pytest

from tests.conftest import SCENARIO_DIR, negative, shipped
from app.config import Config
from app.core.errors import ScenarioParseError
from app.core.scenario_io import (
    build_manifest,
    csv_header,
    dump_scenario,
    file_digest,
    fixture_path,
    gains_from_dict,
    gains_to_dict,
    list_fixtures,
    load_gains,
    load_scenario,
    parse_scenario,
    parse_scenario_text,
    save_gains,
    scenario_to_dict,
    trajectory_csv_text,
    write_manifest,
    write_trajectory_csv,
)
from app.core.simkit import ControlLaw, assemble, integrate
from app.core.synthesis import synthesize

SHIPPED = [
    "adaptive_harmonic",
    "containment_two_leaders",
    "discrete_rotation",
    "harmonic_chain",
    "jointly_connected_cycle",
    "local_exo",
    "sync_ref_leaderless",
]

MINIMAL = {
    "exosystem": {"S_m": [[0.0]], "v0": [1.0]},
    "agents": [{"A": [[0.0]], "B": [[1.0]], "C": [[1.0]], "F_m": [[-1.0]]}],
    "topology": {"graphs": [{"edges": [[0, 1]]}]},
    "sim": {"horizon": 1.0},
}


class TestLoadScenario:

    def test_fixture_library(self):
        assert list_fixtures(SCENARIO_DIR) == SHIPPED

    @pytest.mark.parametrize("name", SHIPPED)
    def test_shipped_fixtures_parse(self, name):
        sc = load_scenario(shipped(name))
        assert sc.name == name
        assert sc.N >= 1

    def test_defaults(self):
        sc = parse_scenario(MINIMAL)
        np.testing.assert_array_equal(sc.exo.C_m0, [[1.0]])
        assert sc.step == 1e-3
        assert sc.law.kind.value == "distributed_measurement"
        # edge without weight gets weight 1
        assert sc.topology.graphs[0].adjacency[1, 0] == 1.0

    def test_step_default_follows_config(self, monkeypatch):
        monkeypatch.setattr(Config, "STEP", 0.02)
        assert parse_scenario(MINIMAL).step == 0.02
        explicit = {**MINIMAL, "sim": {**MINIMAL["sim"], "step": 0.05}}
        assert parse_scenario(explicit).step == 0.05

    def test_discrete_flag(self):
        sc = load_scenario(shipped("discrete_rotation"))
        assert sc.discrete
        assert sc.topology.period == 10.0

    def test_malformed_json_location(self):
        with pytest.raises(ScenarioParseError) as exc:
            load_scenario(negative("malformed_json"))
        assert exc.value.location.startswith(str(negative("malformed_json")) + ":3:")
        assert exc.value.error_type == "scenario_parse_error"

    def test_ragged_matrix_location(self):
        with pytest.raises(ScenarioParseError) as exc:
            load_scenario(negative("ragged_matrix"))
        assert exc.value.location.endswith("agents[0].A")
        assert "equal length" in str(exc.value)

    def test_ragged_matrix_line(self):
        path = negative("ragged_matrix")
        with pytest.raises(ScenarioParseError) as exc:
            load_scenario(path)
        assert exc.value.location == f"{path}:5: agents[0].A"

    def test_kernel_error_line(self):
        text = "\n".join([
            '{',
            '  "exosystem": {"S_m": [[0.0]], "v0": [1.0]},',
            '  "agents": [',
            '    {"A": [[0.0]], "B": [[1.0]], "C": [[1.0]], "F_m": [[-1.0]]},',
            '    {"A": [[0.0]], "B": [[1.0], [2.0]], "C": [[1.0]], "F_m": [[-1.0]]}',
            '  ],',
            '  "topology": {"graphs": [{"edges": [[0, 1], [1, 2]]}]},',
            '  "sim": {"horizon": 1.0}',
            '}',
        ])
        with pytest.raises(ScenarioParseError) as exc:
            parse_scenario_text(text, "doc.json")
        assert exc.value.location == "doc.json:5: agents[1]"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioParseError, match="cannot read scenario"):
            load_scenario(tmp_path / "nope.json")

    def test_unknown_field_rejected(self):
        with pytest.raises(ScenarioParseError) as exc:
            parse_scenario({**MINIMAL, "bogus": 1}, source="doc")
        assert exc.value.location == "doc: bogus"

    def test_two_exosystem_forms_rejected(self):
        doc = {**MINIMAL, "local_exosystems": [{"S": [[0.0]]}]}
        with pytest.raises(ScenarioParseError, match="exactly one of"):
            parse_scenario(doc)

    def test_kernel_errors_name_the_section(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["agents"][0]["B"] = [[1.0], [2.0]]
        with pytest.raises(ScenarioParseError) as exc:
            parse_scenario(doc, source="doc")
        assert exc.value.location == "doc: agents[0]"

    def test_dwell_violation_is_a_topology_error(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["topology"] = {
            "graphs": [{"edges": [[0, 1]]}, {"edges": [[0, 1, 2.0]]}],
            "schedule": [[0.0, 0], [0.1, 1]],
            "dwell": 0.5,
        }
        with pytest.raises(ScenarioParseError) as exc:
            parse_scenario(doc, source="doc")
        assert exc.value.location == "doc: topology"

    def test_text_entry_point(self):
        sc = parse_scenario_text(json.dumps(MINIMAL))
        assert sc.horizon == 1.0

    def test_fixture_path(self):
        assert fixture_path("harmonic_chain", SCENARIO_DIR) == shipped("harmonic_chain")
        with pytest.raises(ScenarioParseError, match="no shipped scenario"):
            fixture_path("does_not_exist", SCENARIO_DIR)


class TestDumpScenario:

    @pytest.mark.parametrize("name", ["harmonic_chain", "containment_two_leaders", "jointly_connected_cycle"])
    def test_reload_gives_same_scenario(self, tmp_path, name):
        sc = load_scenario(shipped(name))
        path = tmp_path / f"{name}.json"
        dump_scenario(sc, path)
        again = load_scenario(path)
        assert scenario_to_dict(again) == scenario_to_dict(sc)

    def test_agent_without_measured_outputs(self, tmp_path):
        doc = {**MINIMAL, "agents": [{**MINIMAL["agents"][0], "C_m": []}], "law": {"kind": "distributed_full_info"}}
        sc = parse_scenario(doc)
        assert sc.agents[0].p_m == 0
        path = tmp_path / "blind.json"
        dump_scenario(sc, path)
        again = load_scenario(path)
        assert again.agents[0].p_m == 0
        assert again.agents[0].D_m.shape == (0, 1)
        assert scenario_to_dict(again) == scenario_to_dict(sc)

    def test_omitted_measurement_defaults_to_error(self):
        assert parse_scenario(MINIMAL).agents[0].p_m == 1

    def test_expanded_containment_has_explicit_exosystem(self):
        doc = scenario_to_dict(load_scenario(shipped("containment_two_leaders")))
        assert "containment" not in doc
        assert len(doc["exosystem"]["S_m"]) == 4


class TestGainsFile:

    def test_save_and_load(self, tmp_path):
        gains = synthesize(load_scenario(shipped("harmonic_chain")))
        path = tmp_path / "gains.json"
        save_gains(gains, path)
        loaded = load_gains(path)
        assert gains_to_dict(loaded) == gains_to_dict(gains)
        assert loaded.observer.rule.value == "riccati-static"

    def test_bad_gains_document(self):
        with pytest.raises(ScenarioParseError) as exc:
            gains_from_dict({"kind": "distributed_measurement", "agents": [{"K1": [[1.0]]}]}, source="g")
        assert exc.value.location.startswith("g: agents[0]")


class TestManifest:

    def test_deterministic(self, tmp_path):
        path = shipped("harmonic_chain")
        sc = load_scenario(path)
        gains = synthesize(sc)
        first = build_manifest(sc, gains, {"scenario": path})
        second = build_manifest(sc, gains, {"scenario": path})
        assert first == second
        assert first["inputs"]["scenario"]["sha256"] == file_digest(path)
        assert first["provenance"]["observer_rule"] == "riccati-static"

        a, b = tmp_path / "a.json", tmp_path / "b.json"
        write_manifest(first, a)
        write_manifest(second, b)
        assert a.read_bytes() == b.read_bytes()


class TestTrajectoryCSV:

    @pytest.fixture
    def trajectory(self):
        sc = load_scenario(shipped("harmonic_chain"))
        return integrate(assemble(sc, ControlLaw.from_gains(synthesize(sc))), horizon=0.5, step=0.1)

    def test_header(self, trajectory):
        assert csv_header(trajectory) == [
            "t", "agent", "x0", "x1", "z0", "z1", "eta0", "eta1", "u0", "e0", "graph_idx",
        ]

    def test_rows(self, trajectory):
        rows = list(csv.reader(io.StringIO(trajectory_csv_text(trajectory))))
        header, body = rows[0], rows[1:]
        # leader plus four agents per sample
        assert len(body) == 6 * 5
        leader = dict(zip(header, body[0]))
        assert leader["agent"] == "0"
        assert float(leader["x0"]) == 1.0
        assert leader["u0"] == ""
        scalar = dict(zip(header, body[1]))
        assert scalar["agent"] == "1"
        assert scalar["x1"] == ""
        assert all(len(r) == len(header) for r in body)

    def test_deterministic(self, trajectory, tmp_path):
        path = tmp_path / "traj.csv"
        write_trajectory_csv(trajectory, path)
        assert path.read_text(encoding="utf-8") == trajectory_csv_text(trajectory)
        assert trajectory_csv_text(trajectory) == trajectory_csv_text(trajectory)
