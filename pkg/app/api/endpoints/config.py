"""
Configuration endpoint
"""

from fastapi import APIRouter

from app.models import ConfigResponse
from app.config import Config
from app.core import add_route_aliases, get_endpoint_info, get_version_info
from app.core.scenario_io import list_fixtures

base_router = APIRouter()
router = add_route_aliases(base_router)


@router.get(
    "/config",
    response_model=ConfigResponse,
    summary="Get configuration",
    description="Current server, simulation and scenario-library settings"
)
async def get_config():
    version_info = get_version_info()

    return ConfigResponse(
        api_info={
            "name": version_info.get("name", "coopreg"),
            "version": version_info["version"],
            "api_version": version_info["api_version"],
            "description": version_info.get("description", ""),
            "license": version_info.get("license", "Unknown"),
            "python_version": version_info["python_version"],
            "platform": version_info["platform"],
        },
        server={
            "host": Config.HOST,
            "port": Config.PORT,
            "log_level": Config.LOG_LEVEL,
        },
        simulation={
            "step": Config.STEP,
            "threshold": Config.THRESHOLD,
            "divergence_limit": Config.DIVERGENCE_LIMIT,
            "final_window": Config.FINAL_WINDOW,
            "max_steps": Config.MAX_STEPS,
            "sweep_workers": Config.SWEEP_WORKERS,
        },
        scenarios={
            "directory": Config.SCENARIO_DIR,
            "available": list_fixtures(),
        },
    )


@router.get(
    "/endpoints",
    summary="List all endpoints",
    description="Every endpoint with its aliases"
)
async def list_endpoints():
    return {
        **get_endpoint_info(),
        "description": "Each endpoint is also served under /v1 and, for some, a short alias",
        "usage": {
            "example": {
                "primary": "/run",
                "aliases": ["/v1/run", "/simulate"],
                "note": "All paths behave identically",
            }
        },
    }


__all__ = ["base_router"]
