"""
Run status endpoints
"""

from typing import Any, Dict

from fastapi import APIRouter, Query

from app.models import RunStatisticsResponse, APIInfoResponse
from app.core import (
    add_route_aliases,
    get_run_status,
    get_run_history,
    get_run_statistics,
    clear_run_history,
    get_memory_info,
    get_version,
    get_version_info,
)

base_router = APIRouter()
router = add_route_aliases(base_router)


@router.get(
    "/status",
    summary="Get run status",
    description="The active check/synth/run/sweep request, if any"
)
async def get_processing_status(
    include_memory: bool = Query(False, description="Include memory usage information"),
    include_history: bool = Query(False, description="Include recent run history"),
    include_stats: bool = Query(False, description="Include run statistics"),
    history_limit: int = Query(5, description="Number of history records to return", ge=1, le=20)
) -> Dict[str, Any]:
    status = get_run_status()

    if include_memory:
        try:
            status["memory_info"] = get_memory_info()
        except Exception as e:
            status["memory_info"] = {"error": f"Failed to get memory info: {str(e)}"}

    if include_history:
        status["run_history"] = get_run_history(history_limit)

    if include_stats:
        status["statistics"] = get_run_statistics()

    return status


@router.get(
    "/status/progress",
    summary="Get current run progress",
    description="Lightweight progress of the active run"
)
async def get_run_progress() -> Dict[str, Any]:
    status = get_run_status()

    if not status.get("is_processing", False):
        return {"is_processing": False, "phase": "idle", "message": "No active runs"}

    progress = status.get("progress", {})
    return {
        "is_processing": True,
        "phase": status.get("phase"),
        "command": status.get("command"),
        "scenario": status.get("scenario"),
        "current_step": progress.get("current_step", ""),
        "progress_percentage": progress.get("progress_percentage", 0),
        "duration_seconds": status.get("duration_seconds", 0),
    }


@router.get(
    "/status/history",
    summary="Get run history",
    description="Recent runs, most recent first"
)
async def get_history(
    limit: int = Query(10, description="Number of history records to return", ge=1, le=50)
) -> Dict[str, Any]:
    history = get_run_history(limit)
    return {"run_history": history, "total_records": len(history), "limit": limit}


@router.get(
    "/status/statistics",
    response_model=RunStatisticsResponse,
    summary="Get run statistics",
    description="Counts, success rate and average duration of recent runs"
)
async def get_statistics() -> Dict[str, Any]:
    return get_run_statistics()


@router.post(
    "/status/history/clear",
    summary="Clear run history",
    description="Clear the run history (keeps the active run)"
)
async def clear_history(
    confirm: bool = Query(False, description="Confirmation required to clear history")
) -> Dict[str, Any]:
    if not confirm:
        return {
            "message": "History clear requires confirmation. Set confirm=true to proceed.",
            "warning": "This will clear all run history except the active run.",
        }
    clear_run_history()
    return {"success": True, "message": "Run history cleared"}


@router.get(
    "/info",
    response_model=APIInfoResponse,
    summary="Get API info and status",
    description="Version, run status, statistics and memory in one payload"
)
async def get_api_info() -> Dict[str, Any]:
    try:
        version_info = get_version_info()
        return {
            "api_name": version_info.get("name", "coopreg"),
            "version": version_info["version"],
            "status": "operational",
            "run_status": get_run_status(),
            "statistics": get_run_statistics(),
            "memory_info": get_memory_info(),
            "recent_runs": get_run_history(3),
        }
    except Exception as e:
        return {
            "api_name": "coopreg",
            "version": get_version(),
            "status": "error",
            "error": f"Failed to get API info: {str(e)}",
        }


__all__ = ["base_router"]
