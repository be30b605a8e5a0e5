"""
Tests for the plant/exosystem data model and assumption checks
"""

import numpy as np
import pytest

from tests.conftest import ROTATION
from app.core.errors import DimensionError, PreconditionError
from app.core.plantmodel import (
    Exosystem,
    LawKind,
    LawSettings,
    LocalAgent,
    PlantAgent,
    Scenario,
    build_containment,
    localize_exogenous,
    validate_assumptions,
)
from app.core.simkit import simulate_open_loop
from app.core.topology import SwitchingSchedule, WeightedDigraph


def _chain(n: int) -> SwitchingSchedule:
    return SwitchingSchedule.static(WeightedDigraph.from_edges(n, [(k, k + 1, 1.0) for k in range(n)]))


class TestPlantAgent:

    def test_defaults_measure_tracking_error(self):
        agent = PlantAgent.create([[0.0]], [[1.0]], [[1.0]], q_m=2, F_m=[[-1.0, 0.0]])
        np.testing.assert_array_equal(agent.C_m, agent.C)
        np.testing.assert_array_equal(agent.F_mm, agent.F_m)
        assert agent.E.shape == (1, 2)
        assert agent.x0.tolist() == [0.0]

    def test_explicit_measurement(self):
        agent = PlantAgent.create([[0.0]], [[1.0]], [[1.0]], q_m=2, C_m=[[2.0]])
        assert agent.p_m == 1
        assert agent.F_mm.shape == (1, 2)
        assert not agent.F_mm.any()

    def test_dimensions(self):
        agent = PlantAgent.create(np.zeros((2, 2)), [[0.0], [1.0]], [[1.0, 0.0]], q_u=1, q_m=2)
        assert (agent.n, agent.m, agent.p, agent.q_u, agent.q_m) == (2, 1, 1, 1, 2)

    def test_wrong_b_rows(self):
        with pytest.raises(DimensionError, match="B must be 2 rows"):
            PlantAgent.create(np.zeros((2, 2)), [[1.0]], [[1.0, 0.0]])

    def test_non_square_a(self):
        with pytest.raises(DimensionError, match="A must be square"):
            PlantAgent.create(np.zeros((2, 3)), [[1.0], [1.0]], [[1.0, 0.0, 0.0]])

    def test_x0_length(self):
        with pytest.raises(DimensionError, match="x0"):
            PlantAgent.create([[0.0]], [[1.0]], [[1.0]], x0=[1.0, 2.0])

    def test_composite_includes_unmeasured_block(self):
        agent = PlantAgent.create([[0.0]], [[1.0]], [[1.0]], q_u=1, E_u=[[1.0]], F_u=[[2.0]])
        A_bar, B_bar, C_bar = agent.composite(np.array([[0.5]]))
        np.testing.assert_array_equal(A_bar, [[0.0, 1.0], [0.0, 0.5]])
        np.testing.assert_array_equal(B_bar, [[1.0], [0.0]])
        np.testing.assert_array_equal(C_bar, [[1.0, 2.0]])


class TestExosystem:

    def test_blocks(self):
        exo = Exosystem(np.array([[0.0]]), ROTATION, np.eye(2), [1.0, 2.0, 3.0])
        assert (exo.q_u, exo.q_m, exo.q, exo.p0) == (1, 2, 3, 2)
        assert exo.S.shape == (3, 3)
        np.testing.assert_array_equal(exo.C0, [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])

    def test_stable_modes(self):
        exo = Exosystem(np.zeros((0, 0)), [[-1.0]], np.eye(1))
        assert exo.stable_modes() == [-1.0]
        assert Exosystem(np.zeros((0, 0)), ROTATION, np.eye(2)).stable_modes() == []

    def test_bad_output_matrix(self):
        with pytest.raises(DimensionError, match="C_m0"):
            Exosystem(np.zeros((0, 0)), ROTATION, np.eye(3))


class TestScenario:

    def test_agent_count_must_match_topology(self, scalar_agent):
        exo = Exosystem(np.zeros((0, 0)), ROTATION, np.eye(2))
        with pytest.raises(DimensionError, match="followers"):
            Scenario((scalar_agent,), exo, _chain(2), 10.0)

    def test_exogenous_split_must_match(self, scalar_agent):
        exo = Exosystem(np.zeros((0, 0)), np.zeros((3, 3)), np.eye(3))
        with pytest.raises(DimensionError, match="exogenous split"):
            Scenario((scalar_agent,), exo, _chain(1), 10.0)

    def test_discrete_horizon_must_be_integral(self, scalar_agent):
        exo = Exosystem(np.zeros((0, 0)), ROTATION, np.eye(2))
        with pytest.raises(DimensionError, match="integer"):
            Scenario((scalar_agent,), exo, _chain(1), 10.5, 1.0, discrete=True)

    def test_overrides_route_law_fields(self, two_agent_chain):
        sc = two_agent_chain.with_overrides(mu=3.0, horizon=2.0)
        assert sc.law.mu == 3.0
        assert sc.horizon == 2.0
        assert two_agent_chain.law.mu is None

    def test_law_settings_validation(self):
        with pytest.raises(PreconditionError):
            LawSettings(mu=-1.0)
        with pytest.raises(PreconditionError):
            LawSettings(observer_init="random")
        assert LawSettings(observer_init=[[1, 2]]).observer_init == ((1.0, 2.0),)

    def test_law_kind_families(self):
        assert LawKind.DISTRIBUTED_MEASUREMENT.uses_observer
        assert LawKind.DISTRIBUTED_MEASUREMENT.uses_compensator
        assert not LawKind.DECENTRALIZED_FULL_INFO.uses_observer
        assert not LawKind.DISTRIBUTED_FULL_INFO.uses_compensator
        assert LawKind.SPECIAL_VM_ONLY.uses_observer


class TestAssumptions:

    def test_harmonic_chain_passes(self, load):
        report = validate_assumptions(load("harmonic_chain"))
        assert report.ok, report.to_text()
        assert report.find("leader-reachable")[0].passed
        assert len(report.find("regulator-solvable")) == 4

    def test_unstabilizable(self, load_negative):
        report = validate_assumptions(load_negative("unstabilizable"))
        assert not report.ok
        assert [c.agent for c in report.failures if c.name == "stabilizable"] == [1]

    def test_undetectable(self, load_negative):
        report = validate_assumptions(load_negative("undetectable"))
        assert "detectable" in report.to_dict()["failures"]

    def test_rank_failure_has_no_regulator(self, load_negative):
        report = validate_assumptions(load_negative("rank_failure"))
        assert "regulator-solvable" in report.to_dict()["failures"]

    def test_unreachable_follower(self, scalar_agent):
        exo = Exosystem(np.zeros((0, 0)), ROTATION, np.eye(2))
        graph = WeightedDigraph.from_edges(2, [(0, 1, 1.0)])
        sc = Scenario((scalar_agent, scalar_agent), exo, SwitchingSchedule.static(graph), 10.0,
                      law=LawSettings(kind=LawKind.DISTRIBUTED_FULL_INFO))
        report = validate_assumptions(sc)
        assert report.to_dict()["failures"] == ["leader-reachable"]

    def test_unreachable_follower_is_harmless_without_observer(self, scalar_agent):
        exo = Exosystem(np.zeros((0, 0)), ROTATION, np.eye(2))
        graph = WeightedDigraph.from_edges(2, [(0, 1, 1.0)])
        sc = Scenario((scalar_agent, scalar_agent), exo, SwitchingSchedule.static(graph), 10.0,
                      law=LawSettings(kind=LawKind.DECENTRALIZED_FULL_INFO))
        assert validate_assumptions(sc).ok

    def test_decaying_exosystem_mode_is_a_warning(self, scalar_agent):
        agent = PlantAgent.create([[0.0]], [[1.0]], [[1.0]], q_m=1, F_m=[[-1.0]])
        exo = Exosystem(np.zeros((0, 0)), [[-1.0]], np.eye(1), [1.0])
        sc = Scenario((agent,), exo, _chain(1), 5.0)
        report = validate_assumptions(sc)
        assert report.ok
        assert report.to_dict()["warnings"] == ["exosystem-spectrum"]

    def test_switching_cycle_is_jointly_connected(self, load):
        report = validate_assumptions(load("jointly_connected_cycle"))
        assert report.find("jointly-connected")[0].passed
        assert report.find("symmetric-graphs")[0].passed

    def test_text_rendering(self, load_negative):
        text = validate_assumptions(load_negative("unstabilizable")).to_text()
        assert "✗ stabilizable [agent 1]" in text
        assert text.splitlines()[-1].startswith("✗ failed:")


class TestContainment:

    def test_builds_convex_reference(self):
        followers = [PlantAgent.create(np.zeros((2, 2)), np.eye(2), np.eye(2), q_m=4) for _ in range(2)]
        sc = build_containment(
            [(ROTATION, [1.0, 0.0]), (2 * ROTATION, [0.0, 1.0])], [0.3, 0.7], followers, _chain(2), 10.0,
        )
        F2 = np.hstack([0.3 * np.eye(2), 0.7 * np.eye(2)])
        np.testing.assert_allclose(sc.exo.C_m0, F2)
        np.testing.assert_allclose(sc.agents[0].F_m, -F2)
        np.testing.assert_allclose(sc.agents[0].F_mm, -F2)
        np.testing.assert_allclose(sc.exo.v0, [1.0, 0.0, 0.0, 1.0])

    def test_weights_must_be_convex(self):
        followers = [PlantAgent.create(np.zeros((2, 2)), np.eye(2), np.eye(2), q_m=4)]
        with pytest.raises(PreconditionError, match="sum to 1"):
            build_containment([(ROTATION, None), (ROTATION, None)], [0.5, 0.6], followers, _chain(1), 1.0)

    def test_needs_two_leaders(self):
        with pytest.raises(PreconditionError):
            build_containment([(ROTATION, None)], [1.0], [], _chain(1), 1.0)

    def test_shipped_fixture_loads(self, load):
        sc = load("containment_two_leaders")
        assert sc.exo.q_m == 4
        np.testing.assert_allclose(sc.exo.C_m0, np.hstack([0.3 * np.eye(2), 0.7 * np.eye(2)]))


class TestLocalExogenous:

    def test_blocks_are_padded(self):
        first = LocalAgent(PlantAgent.create([[0.0]], [[1.0]], [[1.0]], q_m=2, F_m=[[-1.0, 0.0]]), ROTATION, [1.0, 0.0])
        second = LocalAgent(PlantAgent.create([[0.0]], [[1.0]], [[1.0]], q_m=1, F_m=[[-1.0]]), [[0.0]], [0.5])
        sc = localize_exogenous([first, second], _chain(2), 5.0)
        assert sc.exo.q == 3
        np.testing.assert_array_equal(sc.agents[0].F_m, [[-1.0, 0.0, 0.0]])
        np.testing.assert_array_equal(sc.agents[1].F_m, [[0.0, 0.0, -1.0]])
        np.testing.assert_array_equal(sc.exo.v0, [1.0, 0.0, 0.5])
        assert sc.law.kind is LawKind.DECENTRALIZED_FULL_INFO

    def test_open_loop_behaviour_preserved(self):
        first = LocalAgent(
            PlantAgent.create([[0.0]], [[1.0]], [[1.0]], q_m=2, F_m=[[-1.0, 0.0]], E_m=[[0.5, 0.0]], x0=[0.3]),
            ROTATION, [1.0, 0.0],
        )
        second = LocalAgent(
            PlantAgent.create([[-1.0]], [[1.0]], [[1.0]], q_m=1, F_m=[[-1.0]], x0=[-0.2]),
            [[-0.5]], [0.5],
        )
        sc = localize_exogenous([first, second], _chain(2), 5.0)
        u = lambda t: np.array([np.sin(t)])
        for local, stacked in zip((first, second), sc.agents):
            alone = simulate_open_loop(local.agent, local.S, local.v0, 5.0, 0.01, u)
            joint = simulate_open_loop(stacked, sc.exo.S, sc.exo.v0, 5.0, 0.01, u)
            np.testing.assert_allclose(joint.x, alone.x, atol=1e-12)
            np.testing.assert_allclose(joint.e, alone.e, atol=1e-12)

    def test_size_mismatch(self):
        local = LocalAgent(PlantAgent.create([[0.0]], [[1.0]], [[1.0]], q_m=1), ROTATION)
        with pytest.raises(DimensionError):
            localize_exogenous([local], _chain(1), 5.0)
