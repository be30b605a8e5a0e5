"""
Pytest configuration file with shared fixtures and utilities for coopreg tests
"""

import os
import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

SCENARIO_DIR = PROJECT_ROOT / "scenarios"
FIXTURE_DIR = Path(__file__).parent / "fixtures"

# Shipped scenarios resolve against the repo, wherever pytest is launched from
os.environ.setdefault("COOPREG_SCENARIO_DIR", str(SCENARIO_DIR))

ROTATION = np.array([[0.0, 1.0], [-1.0, 0.0]])


def shipped(name: str) -> Path:
    return SCENARIO_DIR / f"{name}.json"


def negative(name: str) -> Path:
    return FIXTURE_DIR / f"{name}.json"


def random_reachable_graph(rng: np.random.Generator, follower_count: int, density: float = 0.3):
    """Random weighted digraph in which every follower is reachable from the leader"""
    from app.core.topology import WeightedDigraph

    edges = [(int(rng.integers(0, k)), k, float(rng.uniform(0.5, 2.0))) for k in range(1, follower_count + 1)]
    taken = {(src, dst) for src, dst, _ in edges}
    for src in range(follower_count + 1):
        for dst in range(1, follower_count + 1):
            if src != dst and (src, dst) not in taken and rng.random() < density:
                edges.append((src, dst, float(rng.uniform(0.5, 2.0))))
    return WeightedDigraph.from_edges(follower_count, edges)


@pytest.fixture
def load():
    """Load a shipped scenario by name"""
    from app.core.scenario_io import load_scenario

    def _load(name: str, **overrides):
        sc = load_scenario(shipped(name))
        return sc.with_overrides(**overrides) if overrides else sc

    return _load


@pytest.fixture
def load_negative():
    from app.core.scenario_io import load_scenario

    def _load(name: str):
        return load_scenario(negative(name))

    return _load


@pytest.fixture
def scalar_agent():
    """ẋ = u, e = x - v_1 against a two-dimensional exosystem"""
    from app.core.plantmodel import PlantAgent
    return PlantAgent.create([[0.0]], [[1.0]], [[1.0]], q_m=2, F_m=[[-1.0, 0.0]])


@pytest.fixture
def two_agent_chain(scalar_agent):
    """Two scalar integrators on the chain 0 -> 1 -> 2 with a harmonic leader"""
    from app.core.plantmodel import Exosystem, LawSettings, Scenario
    from app.core.topology import SwitchingSchedule, WeightedDigraph

    graph = WeightedDigraph.from_edges(2, [(0, 1, 1.0), (1, 2, 1.0)])
    exo = Exosystem(np.zeros((0, 0)), ROTATION, np.eye(2), np.array([1.0, 0.0]))
    return Scenario(
        (scalar_agent, scalar_agent), exo, SwitchingSchedule.static(graph), 10.0, 1e-3,
        LawSettings(), name="two_agent_chain",
    )


@pytest.fixture
def tmp_out(tmp_path):
    """Scratch directory for CLI outputs"""
    out = tmp_path / "out"
    out.mkdir()
    return out


def pytest_configure(config):
    config.addinivalue_line("markers", "unit: kernel unit tests")
    config.addinivalue_line("markers", "integration: pipeline and CLI tests")
    config.addinivalue_line("markers", "api: API tests")
    config.addinivalue_line("markers", "slow: slow running tests")
    config.addinivalue_line("markers", "acceptance: end-to-end checks on shipped scenarios")


def pytest_collection_modifyitems(config, items):
    """Add markers based on test file names"""
    for item in items:
        if "test_api" in item.nodeid:
            item.add_marker(pytest.mark.api)
        elif "test_acceptance" in item.nodeid:
            item.add_marker(pytest.mark.acceptance)
            item.add_marker(pytest.mark.slow)
        elif "test_cli" in item.nodeid or "test_pipeline" in item.nodeid:
            item.add_marker(pytest.mark.integration)
        else:
            item.add_marker(pytest.mark.unit)


def pytest_runtest_setup(item):
    """Skip slow tests unless explicitly requested"""
    if "slow" in [mark.name for mark in item.iter_markers()]:
        if not item.config.getoption("--runslow", default=False):
            pytest.skip("need --runslow option to run")


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False,
        help="run slow tests"
    )
