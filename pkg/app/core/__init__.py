"""
Core functionality for the cooperative regulation toolkit
"""

from .errors import CoopRegError
from .memory import get_memory_info, cleanup_memory
from .version import get_version, get_version_info
from .aliases import add_route_aliases, get_all_aliases, get_endpoint_info, ENDPOINT_ALIASES
from .status import (
    RunPhase,
    start_run,
    update_run_status,
    get_run_status,
    get_run_history,
    get_run_statistics,
    clear_run_history,
)

__all__ = [
    "CoopRegError",
    "get_memory_info",
    "cleanup_memory",
    "get_version",
    "get_version_info",
    "add_route_aliases",
    "get_all_aliases",
    "get_endpoint_info",
    "ENDPOINT_ALIASES",
    "RunPhase",
    "start_run",
    "update_run_status",
    "get_run_status",
    "get_run_history",
    "get_run_statistics",
    "clear_run_history",
]
