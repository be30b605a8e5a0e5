"""
Health check endpoints
"""

from fastapi import APIRouter

from app.models import HealthResponse
from app.config import Config
from app.core import get_memory_info, get_version, add_route_aliases
from app.core.scenario_io import list_fixtures

base_router = APIRouter()
router = add_route_aliases(base_router)


@router.get(
    "/health",
    response_model=HealthResponse,
    summary="Health check",
    description="API health, simulation defaults and scenario library status"
)
async def health_check():
    """The service has no warm-up phase; it is healthy once the scenario library is readable"""
    fixtures = list_fixtures()
    return HealthResponse(
        status="healthy" if fixtures else "degraded",
        version=get_version(),
        config={
            "step": Config.STEP,
            "threshold": Config.THRESHOLD,
            "divergence_limit": Config.DIVERGENCE_LIMIT,
            "scenario_dir": Config.SCENARIO_DIR,
            "scenarios_available": len(fixtures),
        },
        memory_info=get_memory_info(),
    )


@router.get(
    "/ping",
    summary="Simple connectivity check",
    description="Basic connectivity test - always responds immediately"
)
async def ping():
    return {"status": "ok", "message": "Server is running"}


__all__ = ["base_router"]
