"""
Version information read from pyproject.toml
"""

import logging
import sys
import tomllib
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)

__version__ = "0.1.0"  # used when pyproject.toml is not shipped alongside the package
__all__ = ["get_version", "get_version_info", "__version__"]


@lru_cache(maxsize=1)
def _read_pyproject() -> Optional[Dict[str, Any]]:
    path = Path(__file__).resolve().parent.parent.parent / "pyproject.toml"
    if not path.exists():
        return None
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except (OSError, tomllib.TOMLDecodeError) as e:
        logger.warning("could not read pyproject.toml: %s", e)
        return None


def get_version() -> str:
    data = _read_pyproject()
    if data and "version" in data.get("project", {}):
        return data["project"]["version"]
    return __version__


def get_version_info() -> Dict[str, Any]:
    version = get_version()
    info = {
        "version": version,
        "api_version": version,
        "python_version": f"{sys.version_info.major}.{sys.version_info.minor}.{sys.version_info.micro}",
        "platform": sys.platform,
    }
    project = (_read_pyproject() or {}).get("project")
    if project:
        info.update({
            "name": project.get("name", "coopreg"),
            "description": project.get("description", ""),
            "license": project.get("license", {}).get("text", "Unknown"),
            "requires_python": project.get("requires-python", ">=3.11"),
        })
    return info
