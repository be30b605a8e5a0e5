"""
Pydantic models for scenario documents, requests and responses
"""

from .scenario import ScenarioModel, GainsModel
from .requests import ScenarioRequest, RunRequest, SweepRequest
from .responses import (
    HealthResponse,
    ConfigResponse,
    ErrorResponse,
    CheckResponse,
    SynthResponse,
    RunResponse,
    SweepResponse,
    ScenarioListResponse,
    RunProgressResponse,
    RunStatusResponse,
    RunStatisticsResponse,
    APIInfoResponse,
)

__all__ = [
    "ScenarioModel",
    "GainsModel",
    "ScenarioRequest",
    "RunRequest",
    "SweepRequest",
    "HealthResponse",
    "ConfigResponse",
    "ErrorResponse",
    "CheckResponse",
    "SynthResponse",
    "RunResponse",
    "SweepResponse",
    "ScenarioListResponse",
    "RunProgressResponse",
    "RunStatusResponse",
    "RunStatisticsResponse",
    "APIInfoResponse",
]
