"""
Scenario and gains files, run manifests and trajectory CSV export
"""

import csv
import dataclasses
import hashlib
import io
import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, TextIO, Tuple, Union

import numpy as np
from pydantic import ValidationError

from app.config import Config
from app.core.errors import CoopRegError, ScenarioParseError
from app.core.observers import GainRule, ObserverGains, ObserverVariant
from app.core.plantmodel import (
    Exosystem,
    LawSettings,
    LocalAgent,
    PlantAgent,
    Scenario,
    build_containment,
    localize_exogenous,
)
from app.core.simkit import Trajectory
from app.core.synthesis import AgentGains, GainSet
from app.core.topology import SwitchingSchedule, WeightedDigraph
from app.core.version import get_version
from app.models.scenario import AgentModel, GainsModel, LawModel, ScenarioModel

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _field_path(loc: Iterable[Any]) -> str:
    """('agents', 1, 'A', 0) -> 'agents[1].A[0]'"""
    out = ""
    for part in loc:
        if isinstance(part, int):
            out += f"[{part}]"
        else:
            out += ("." if out else "") + str(part)
    return out


def _skip_ws(text: str, pos: int) -> int:
    while pos < len(text) and text[pos] in " \t\r\n":
        pos += 1
    return pos


def _offset_of(text: str, loc: Iterable[Any]) -> int:
    """
    Character offset of the value at `loc` in a JSON document. Stops at the
    deepest part of the path that exists in the text.
    """
    decoder = json.JSONDecoder()
    pos = found = _skip_ws(text, 0)
    try:
        for part in loc:
            if isinstance(part, int):
                if text[pos] != "[":
                    break
                pos = _skip_ws(text, pos + 1)
                for _ in range(part):
                    _, pos = decoder.raw_decode(text, pos)
                    pos = _skip_ws(text, pos)
                    if text[pos] != ",":
                        return found
                    pos = _skip_ws(text, pos + 1)
            else:
                if text[pos] != "{":
                    break
                pos = _skip_ws(text, pos + 1)
                while True:
                    if text[pos] != '"':
                        return found
                    key, pos = decoder.raw_decode(text, pos)
                    pos = _skip_ws(text, pos)
                    pos = _skip_ws(text, pos + 1)
                    if key == part:
                        break
                    _, pos = decoder.raw_decode(text, pos)
                    pos = _skip_ws(text, pos)
                    if text[pos] != ",":
                        return found
                    pos = _skip_ws(text, pos + 1)
            found = pos
    except (ValueError, IndexError):
        pass
    return found


def _where(source: str, loc: Tuple[Any, ...], text: Optional[str] = None) -> str:
    """'file: agents[0].A', or 'file:5: agents[0].A' when the document text is known"""
    path = _field_path(loc)
    if text is not None:
        line = text.count("\n", 0, _offset_of(text, loc)) + 1
        source = f"{source}:{line}"
    return f"{source}: {path}" if path else source


def _validation_error(e: ValidationError, source: str, text: Optional[str] = None) -> ScenarioParseError:
    first = e.errors()[0]
    return ScenarioParseError(first["msg"], location=_where(source, tuple(first["loc"]), text))


def _load_json(text: str, source: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(e.msg, location=f"{source}:{e.lineno}:{e.colno}") from e


def _matrix(rows) -> Optional[np.ndarray]:
    if rows is None:
        return None
    if not rows:
        return np.zeros((0, 0))
    return np.asarray(rows, dtype=float)


def _agent(model: AgentModel, q_u: int, q_m: int) -> PlantAgent:
    # an empty list means "use the default", since [] carries no row count
    kwargs = {
        name: _matrix(getattr(model, name)) if getattr(model, name) else None
        for name in ("D", "E_u", "E_m", "C_m", "D_m", "F_mu", "F_mm", "F_u", "F_m")
    }
    # except an explicit C_m: [], which is an agent with no measured outputs
    if model.C_m is not None and not model.C_m:
        kwargs["C_m"] = np.zeros((0, len(model.A)))
    return PlantAgent.create(_matrix(model.A), _matrix(model.B), _matrix(model.C), q_u=q_u, q_m=q_m,
                             x0=model.x0, **kwargs)


def _law(model: LawModel) -> LawSettings:
    data = model.model_dump()
    if not isinstance(data["observer_init"], str):
        data["observer_init"] = tuple(tuple(r) for r in data["observer_init"])
    return LawSettings(**data)


def _schedule(model, follower_count: int) -> SwitchingSchedule:
    graphs = [WeightedDigraph.from_edges(follower_count, g.edges, g.undirected) for g in model.graphs]
    if model.schedule is None:
        return SwitchingSchedule(graphs, (0.0,), (0,), model.dwell, model.period)
    times = [t for t, _ in model.schedule]
    active = [k for _, k in model.schedule]
    return SwitchingSchedule(graphs, times, active, model.dwell, model.period)


@contextmanager
def _located(source: str, text: Optional[str], *loc: Any):
    """Turn kernel validation errors into parse errors located at `loc`"""
    try:
        yield
    except ScenarioParseError:
        raise
    except (CoopRegError, ValueError) as e:
        raise ScenarioParseError(str(e), location=_where(source, loc, text)) from e


def scenario_from_model(model: ScenarioModel, source: str = "<scenario>", text: Optional[str] = None) -> Scenario:
    """
    Build a Scenario from a validated document.

    Raises:
        ScenarioParseError: the document is well-formed but inconsistent;
            the location names the offending section, with its line when
            the document `text` is given
    """
    N = len(model.agents)
    with _located(source, text, "topology"):
        topology = _schedule(model.topology, N)
    with _located(source, text, "law"):
        law = _law(model.law)
    horizon = model.sim.horizon
    step = Config.STEP if model.sim.step is None else model.sim.step

    if model.containment is not None:
        c = model.containment
        q0 = len(c.leaders[0].S)
        q = q0 * len(c.leaders)
        followers = []
        for i, a in enumerate(model.agents):
            with _located(source, text, "agents", i):
                followers.append(_agent(a, 0, q))
        with _located(source, text, "containment"):
            leaders = [(_matrix(l.S), l.v0) for l in c.leaders]
            sc = build_containment(leaders, c.alphas, followers, topology, horizon, step, law, model.name)
    elif model.local_exosystems is not None:
        locals_ = []
        for i, (a, ex) in enumerate(zip(model.agents, model.local_exosystems)):
            with _located(source, text, "agents", i):
                locals_.append(LocalAgent(_agent(a, 0, len(ex.S)), _matrix(ex.S), ex.v0))
        with _located(source, text, "local_exosystems"):
            sc = localize_exogenous(locals_, topology, horizon, step, law, model.name)
    else:
        ex = model.exosystem
        with _located(source, text, "exosystem"):
            S_u, S_m = _matrix(ex.S_u), _matrix(ex.S_m)
            q_m = S_m.shape[0]
            C_m0 = np.eye(q_m) if ex.C_m0 is None else _matrix(ex.C_m0)
            if C_m0.size == 0:
                C_m0 = np.zeros((0, q_m))
            exo = Exosystem(S_u, S_m, C_m0, ex.v0)
        agents = []
        for i, a in enumerate(model.agents):
            with _located(source, text, "agents", i):
                agents.append(_agent(a, exo.q_u, exo.q_m))
        with _located(source, text, "scenario"):
            sc = Scenario(tuple(agents), exo, topology, horizon, step, law, model.discrete, model.name)

    if model.discrete and not sc.discrete:
        with _located(source, text, "scenario"):
            sc = dataclasses.replace(sc, discrete=True)
    return sc


def parse_scenario(data: Any, source: str = "<scenario>", text: Optional[str] = None) -> Scenario:
    """Validate a decoded JSON document and build the Scenario"""
    try:
        model = ScenarioModel.model_validate(data)
    except ValidationError as e:
        raise _validation_error(e, source, text) from e
    return scenario_from_model(model, source, text)


def parse_scenario_text(text: str, source: str = "<scenario>") -> Scenario:
    return parse_scenario(_load_json(text, source), source, text)


def load_scenario(path: PathLike) -> Scenario:
    """
    Read a scenario file.

    Raises:
        ScenarioParseError: unreadable file, JSON syntax error (file:line:col)
            or schema error (file:line: field.path[index])
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioParseError(f"cannot read scenario: {e.strerror}", location=str(path)) from e
    sc = parse_scenario_text(text, str(path))
    logger.debug("loaded scenario %s from %s", sc.name or "<unnamed>", path)
    return sc


def _rows(M: np.ndarray) -> List[List[float]]:
    return [[float(x) for x in row] for row in np.asarray(M)]


def scenario_to_dict(sc: Scenario) -> Dict[str, Any]:
    """Explicit document for a Scenario (containment and local forms expanded)"""
    agents = []
    for a in sc.agents:
        agents.append({
            name: _rows(getattr(a, name))
            for name in ("A", "B", "C", "D", "E_u", "E_m", "C_m", "D_m", "F_mu", "F_mm", "F_u", "F_m")
        } | {"x0": [float(x) for x in a.x0]})
    sched = sc.topology
    law = sc.law
    observer_init = law.observer_init if isinstance(law.observer_init, str) else [list(r) for r in law.observer_init]
    return {
        "name": sc.name,
        "discrete": sc.discrete,
        "exosystem": {
            "S_u": _rows(sc.exo.S_u),
            "S_m": _rows(sc.exo.S_m),
            "C_m0": _rows(sc.exo.C_m0),
            "v0": [float(x) for x in sc.exo.v0],
        },
        "agents": agents,
        "topology": {
            "graphs": [
                {"edges": [[s, d, w] for s, d, w in g.edges()], "undirected": g.undirected}
                for g in sched.graphs
            ],
            "schedule": [[t, k] for t, k in zip(sched.switch_times, sched.active)],
            "dwell": sched.dwell,
            "period": sched.period,
        },
        "sim": {"horizon": sc.horizon, "step": sc.step},
        "law": {
            "kind": law.kind.value,
            "observer": law.observer,
            "gain_rule": law.gain_rule,
            "mu": law.mu,
            "mu_scale": law.mu_scale,
            "mu1": law.mu1,
            "mu2": law.mu2,
            "observer_init": observer_init,
            "adaptive_init": law.adaptive_init,
            "threshold": law.threshold,
            "window": law.window,
        },
    }


def dump_scenario(sc: Scenario, path: PathLike):
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n", encoding="utf-8")


def gains_to_dict(gains: GainSet) -> Dict[str, Any]:
    agents = []
    for g in gains.agents:
        agents.append({
            "K1": _rows(g.K1), "K2": _rows(g.K2), "q_u": g.q_u,
            "X": _rows(g.X), "U": _rows(g.U),
            "L": None if g.L is None else _rows(g.L),
            "A_L": None if g.A_L is None else _rows(g.A_L),
            "residual": float(g.residual),
            "provenance": dict(g.provenance),
        })
    observer = None
    if gains.observer is not None:
        o = gains.observer
        observer = {
            "variant": o.variant.value, "rule": o.rule.value, "mu": float(o.mu),
            "L0": _rows(o.L0), "S": _rows(o.S), "C0": _rows(o.C0),
            "mu1": float(o.mu1), "mu2": float(o.mu2), "notes": _plain(o.notes),
        }
    return {
        "kind": gains.kind.value,
        "discrete": gains.discrete,
        "agents": agents,
        "observer": observer,
        "notes": _plain(gains.notes),
    }


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value


def gains_from_dict(data: Any, source: str = "<gains>") -> GainSet:
    try:
        model = GainsModel.model_validate(data)
    except ValidationError as e:
        raise _validation_error(e, source) from e
    agents = []
    for g in model.agents:
        agents.append(AgentGains(_matrix(g.K1), _matrix(g.K2), g.q_u, _matrix(g.X), _matrix(g.U), _matrix(g.L), _matrix(g.A_L), g.residual, dict(g.provenance)))
    observer = None
    if model.observer is not None:
        o = model.observer
        with _located(source, None, "observer"):
            observer = ObserverGains(ObserverVariant(o.variant), GainRule(o.rule), o.mu,
                                     _matrix(o.L0), _matrix(o.S), _matrix(o.C0), o.mu1, o.mu2, dict(o.notes))
    return GainSet(model.kind, tuple(agents), observer, model.discrete, dict(model.notes))


def save_gains(gains: GainSet, path: PathLike):
    Path(path).write_text(json.dumps(gains_to_dict(gains), indent=2) + "\n", encoding="utf-8")


def load_gains(path: PathLike) -> GainSet:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioParseError(f"cannot read gains: {e.strerror}", location=str(path)) from e
    return gains_from_dict(_load_json(text, str(path)), str(path))


def file_digest(path: PathLike) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_manifest(
    sc: Scenario,
    gains: GainSet,
    inputs: Optional[Dict[str, PathLike]] = None,
) -> Dict[str, Any]:
    """
    Everything needed to reproduce a run: tool version, input hashes,
    resolved gains and the design path of each gain. No timestamps, so
    identical inputs give identical manifests.
    """
    inputs = inputs or {}
    observer = gains.observer
    return {
        "tool": "coopreg",
        "version": get_version(),
        "scenario": sc.name,
        "inputs": {label: {"path": str(p), "sha256": file_digest(p)} for label, p in sorted(inputs.items())},
        "provenance": {
            "law": gains.kind.value,
            "discrete": gains.discrete,
            "observer_rule": observer.rule.value if observer else None,
            "observer_mu": float(observer.mu) if observer else None,
            "agents": [dict(g.provenance) for g in gains.agents],
        },
        "gains": gains_to_dict(gains),
    }


def write_manifest(manifest: Dict[str, Any], path: PathLike):
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def csv_header(tr: Trajectory) -> List[str]:
    layout = tr.layout
    agents = tr.loop.scenario.agents
    n_x = max(max(layout.n), layout.q)
    n_z = max(layout.n_z)
    n_u = max(a.m for a in agents)
    n_e = max(a.p for a in agents)
    return (
        ["t", "agent"]
        + [f"x{k}" for k in range(n_x)]
        + [f"z{k}" for k in range(n_z)]
        + [f"eta{k}" for k in range(layout.q_eta)]
        + [f"u{k}" for k in range(n_u)]
        + [f"e{k}" for k in range(n_e)]
        + ["graph_idx"]
    )


def write_trajectory_csv(tr: Trajectory, out: Union[PathLike, TextIO]):
    """
    One row per (sample, agent). Agent 0 rows carry the leader state v in
    the x columns; cells an agent does not have stay empty. Numbers use 17
    significant digits.
    """
    header = csv_header(tr)
    layout = tr.layout
    n_x = max(max(layout.n), layout.q)
    n_z = max(layout.n_z)
    n_u = len([h for h in header if h.startswith("u")])
    n_e = len([h for h in header if h.startswith("e") and not h.startswith("eta")])

    def pad(values: np.ndarray, width: int) -> List[str]:
        cells = [_fmt(x) for x in values]
        return cells + [""] * (width - len(cells))

    per_agent = [(tr.x(i), tr.z(i), tr.eta(i) if layout.q_eta else None, tr.u(i), tr.e(i))
                 for i in range(layout.N)]
    v = tr.v

    def emit(writer):
        writer.writerow(header)
        for k, t in enumerate(tr.times):
            t_cell, g_cell = _fmt(t), str(int(tr.graph_index[k]))
            writer.writerow([t_cell, "0"] + pad(v[k], n_x) + [""] * (n_z + layout.q_eta + n_u + n_e) + [g_cell])
            for i, (x, z, eta, u, e) in enumerate(per_agent, start=1):
                row = [t_cell, str(i)] + pad(x[k], n_x) + pad(z[k], n_z)
                row += pad(eta[k], layout.q_eta) if eta is not None else []
                row += pad(u[k], n_u) + pad(e[k], n_e) + [g_cell]
                writer.writerow(row)

    if isinstance(out, (str, Path)):
        with open(out, "w", newline="", encoding="utf-8") as f:
            emit(csv.writer(f, lineterminator="\n"))
    else:
        emit(csv.writer(out, lineterminator="\n"))


def trajectory_csv_text(tr: Trajectory) -> str:
    buf = io.StringIO()
    write_trajectory_csv(tr, buf)
    return buf.getvalue()


def scenario_dir() -> Path:
    return Path(Config.SCENARIO_DIR)


def list_fixtures(directory: Optional[PathLike] = None) -> List[str]:
    """Names of the shipped scenario files (without extension)"""
    root = Path(directory) if directory is not None else scenario_dir()
    if not root.is_dir():
        return []
    return sorted(p.stem for p in root.glob("*.json"))


def fixture_path(name: str, directory: Optional[PathLike] = None) -> Path:
    root = Path(directory) if directory is not None else scenario_dir()
    path = root / f"{name}.json"
    if not path.is_file():
        raise ScenarioParseError(f"no shipped scenario named '{name}'", location=str(root))
    return path
