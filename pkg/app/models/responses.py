"""
Response models for API validation
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel


class HealthResponse(BaseModel):
    status: str
    version: str
    config: Dict[str, Any]
    memory_info: Optional[Dict[str, float]] = None


class ConfigResponse(BaseModel):
    api_info: Dict[str, Any]
    server: Dict[str, Any]
    simulation: Dict[str, Any]
    scenarios: Dict[str, Any]


class ErrorResponse(BaseModel):
    error: Dict[str, str]


class CheckResponse(BaseModel):
    scenario: str
    ok: bool
    failures: List[str]
    warnings: List[str]
    checks: List[Dict[str, Any]]
    text: str


class SynthResponse(BaseModel):
    scenario: str
    gains: Dict[str, Any]
    manifest: Dict[str, Any]


class RunResponse(BaseModel):
    scenario: str
    diverged: bool
    exit_code: int
    threshold: float
    divergence: Optional[Dict[str, Optional[float]]] = None
    metrics: Optional[Dict[str, Any]] = None
    samples: Optional[int] = None
    refinements: Optional[List[Dict[str, Any]]] = None
    csv: Optional[str] = None


class SweepResponse(BaseModel):
    scenario: str
    rows: List[Dict[str, Any]]


class ScenarioListResponse(BaseModel):
    directory: str
    scenarios: List[str]


class RunProgressResponse(BaseModel):
    steps_done: int
    steps_total: int
    current_step: str
    progress_percentage: float


class RunStatusResponse(BaseModel):
    phase: str
    is_processing: bool
    run_id: Optional[str] = None
    command: Optional[str] = None
    scenario: Optional[str] = None
    start_time: Optional[float] = None
    duration_seconds: Optional[float] = None
    parameters: Optional[Dict[str, Any]] = None
    progress: Optional[RunProgressResponse] = None
    outcome: Optional[str] = None
    error_message: Optional[str] = None
    total_runs: int = 0
    message: Optional[str] = None


class RunStatisticsResponse(BaseModel):
    total_runs: int
    completed_runs: int
    error_runs: int
    success_rate: float
    average_duration_seconds: float
    runs_by_command: Dict[str, int]
    is_processing: bool


class APIInfoResponse(BaseModel):
    api_name: str
    version: str
    status: str
    run_status: Optional[RunStatusResponse] = None
    statistics: Optional[RunStatisticsResponse] = None
    memory_info: Optional[Dict[str, float]] = None
    recent_runs: Optional[List[Dict[str, Any]]] = None
    error: Optional[str] = None
