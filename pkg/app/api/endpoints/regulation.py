"""
Scenario library, solvability check, gain synthesis, simulation and sweeps
"""

import asyncio
import functools
import json
import logging
import math
from typing import Any, Callable, Dict

from fastapi import APIRouter, HTTPException, status

from app.config import Config
from app.core import RunPhase, add_route_aliases, cleanup_memory, start_run, update_run_status
from app.core.errors import CoopRegError, DimensionError, ScenarioParseError
from app.core.pipeline import check, run, sweep, synth
from app.core.plantmodel import Scenario
from app.core.scenario_io import (
    build_manifest,
    fixture_path,
    gains_to_dict,
    list_fixtures,
    load_scenario,
    scenario_dir,
    scenario_from_model,
    trajectory_csv_text,
)
from app.models import (
    CheckResponse,
    ErrorResponse,
    RunRequest,
    RunResponse,
    ScenarioListResponse,
    ScenarioRequest,
    SweepRequest,
    SweepResponse,
    SynthResponse,
)

logger = logging.getLogger(__name__)

base_router = APIRouter()
router = add_route_aliases(base_router)

ERROR_RESPONSES = {400: {"model": ErrorResponse}, 404: {"model": ErrorResponse}, 422: {"model": ErrorResponse}}


def _http_error(e: CoopRegError) -> HTTPException:
    code = status.HTTP_422_UNPROCESSABLE_ENTITY if isinstance(e, (ScenarioParseError, DimensionError)) else status.HTTP_400_BAD_REQUEST
    return HTTPException(status_code=code, detail=e.to_dict())


def _not_found(name: str) -> HTTPException:
    return HTTPException(
        status_code=status.HTTP_404_NOT_FOUND,
        detail={"error": {"message": f"No shipped scenario named '{name}'", "type": "not_found"}},
    )


def _json_safe(divergence):
    # a non-finite norm is not valid JSON
    if not divergence:
        return divergence
    return {k: (v if v is None or math.isfinite(v) else None) for k, v in divergence.items()}


def _resolve(request: ScenarioRequest) -> Scenario:
    if request.fixture is not None:
        if request.fixture not in list_fixtures():
            raise _not_found(request.fixture)
        sc = load_scenario(fixture_path(request.fixture))
    else:
        sc = scenario_from_model(request.scenario, source="request.scenario")
    overrides = {k: getattr(request, k) for k in ("mu", "step", "horizon") if getattr(request, k) is not None}
    return sc.with_overrides(**overrides) if overrides else sc


async def _tracked(command: str, request: ScenarioRequest, work: Callable[..., Any]):
    """Resolve the scenario and run `work` in the default executor under run tracking"""
    label = request.fixture or (request.scenario.name if request.scenario else "")
    run_id = start_run(command, label, request.model_dump(exclude={"scenario"}, exclude_none=True))
    on_phase = lambda phase: update_run_status(run_id, RunPhase(phase), current_step=phase)
    on_progress = lambda done, total: update_run_status(run_id, RunPhase.SIMULATING, steps_done=done, steps_total=total)
    try:
        sc = _resolve(request)
        loop = asyncio.get_running_loop()
        result = await loop.run_in_executor(None, functools.partial(work, sc, on_phase, on_progress))
    except HTTPException as e:
        update_run_status(run_id, RunPhase.ERROR, error_message=str(e.detail))
        raise
    except CoopRegError as e:
        update_run_status(run_id, RunPhase.ERROR, error_message=str(e))
        logger.info("%s failed: %s", command, e)
        raise _http_error(e)
    except Exception as e:
        update_run_status(run_id, RunPhase.ERROR, error_message=str(e))
        raise
    update_run_status(run_id, RunPhase.COMPLETED, outcome="ok")
    return sc, result


@router.get(
    "/scenarios",
    response_model=ScenarioListResponse,
    summary="List shipped scenarios",
    description="Names of the scenario fixtures in COOPREG_SCENARIO_DIR",
)
async def list_scenarios():
    return ScenarioListResponse(directory=str(scenario_dir()), scenarios=list_fixtures())


@router.get(
    "/scenarios/{name}",
    summary="Get a shipped scenario",
    description="The raw scenario document of a shipped fixture",
    responses=ERROR_RESPONSES,
)
async def get_scenario(name: str) -> Dict[str, Any]:
    if name not in list_fixtures():
        raise _not_found(name)
    return json.loads(fixture_path(name).read_text(encoding="utf-8"))


@router.post(
    "/check",
    response_model=CheckResponse,
    summary="Solvability report",
    description="Stabilizability, detectability, regulator solvability, rank condition, topology and observer design checks",
    responses=ERROR_RESPONSES,
)
async def check_scenario(request: ScenarioRequest):
    sc, report = await _tracked("check", request, lambda sc, on_phase, _: check(sc, on_phase))
    data = report.to_dict()
    return CheckResponse(scenario=sc.name, text=report.to_text(), **data)


@router.post(
    "/synth",
    response_model=SynthResponse,
    summary="Synthesize gains",
    description="Feedback, feedforward, Luenberger and distributed observer gains with a reproducibility manifest",
    responses=ERROR_RESPONSES,
)
async def synth_gains(request: ScenarioRequest):
    sc, gains = await _tracked("synth", request, lambda sc, on_phase, _: synth(sc, on_phase))
    inputs = {"scenario": fixture_path(request.fixture)} if request.fixture else {}
    return SynthResponse(scenario=sc.name, gains=gains_to_dict(gains), manifest=build_manifest(sc, gains, inputs))


@router.post(
    "/run",
    response_model=RunResponse,
    summary="Simulate the closed loop",
    description="Synthesize, simulate and report tracking metrics; divergence is reported with diverged=true",
    responses=ERROR_RESPONSES,
)
async def run_scenario(request: RunRequest):
    def work(sc, on_phase, on_progress):
        result = run(sc, flip_k1=request.flip_k1, threshold=request.threshold, on_phase=on_phase, on_progress=on_progress)
        csv = trajectory_csv_text(result.trajectory) if request.include_csv and result.trajectory is not None else None
        return result, csv

    _, (result, csv) = await _tracked("run", request, work)
    body = result.to_dict()
    body.pop("exit_code", None)
    body["divergence"] = _json_safe(body.get("divergence"))
    cleanup_memory()
    return RunResponse(exit_code=int(result.exit_code), csv=csv, **body)


@router.post(
    "/sweep",
    response_model=SweepResponse,
    summary="Parameter sweep",
    description="One run per (μ, step) grid point; sub-run errors are recorded per row",
    responses=ERROR_RESPONSES,
)
async def sweep_scenario(request: SweepRequest):
    if not request.mus and not request.steps:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail={"error": {"message": "sweep needs 'mus', 'steps' or both", "type": "invalid_request_error"}},
        )
    work = lambda sc, on_phase, _: sweep(sc, request.mus, request.steps, request.threshold, Config.SWEEP_WORKERS)
    _, result = await _tracked("sweep", request, work)
    body = result.to_dict()
    for row in body["rows"]:
        row["divergence"] = _json_safe(row["divergence"])
    return SweepResponse(**body)


__all__ = ["base_router"]
