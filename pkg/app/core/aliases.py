"""
Endpoint alias management
"""

from typing import Any, Dict, List

# "primary path": [alias paths]; aliases are served but hidden from the schema
ENDPOINT_ALIASES: Dict[str, List[str]] = {
    "/health": ["/v1/health"],
    "/ping": ["/v1/ping"],
    "/config": ["/v1/config"],
    "/endpoints": ["/v1/endpoints", "/routes"],
    "/status": ["/v1/status"],
    "/status/progress": ["/v1/status/progress", "/progress"],
    "/status/history": ["/v1/status/history", "/history"],
    "/status/statistics": ["/v1/status/statistics", "/stats"],
    "/status/history/clear": ["/v1/status/history/clear"],
    "/info": ["/v1/info"],
    "/scenarios": ["/v1/scenarios", "/fixtures"],
    "/scenarios/{name}": ["/v1/scenarios/{name}"],
    "/check": ["/v1/check"],
    "/synth": ["/v1/synth", "/gains"],
    "/run": ["/v1/run", "/simulate"],
    "/sweep": ["/v1/sweep"],
}


class AliasedRouter:
    """Wraps an APIRouter so every route is also registered under its aliases"""

    def __init__(self, router):
        self._router = router

    def __getattr__(self, name):
        return getattr(self._router, name)

    def _route(self, method: str, path: str, **kwargs):
        register = getattr(self._router, method)

        def decorator(func):
            register(path, **kwargs)(func)
            for alias in ENDPOINT_ALIASES.get(path, []):
                register(alias, **{**kwargs, "include_in_schema": False})(func)
            return func

        return decorator

    def get(self, path: str, **kwargs):
        return self._route("get", path, **kwargs)

    def post(self, path: str, **kwargs):
        return self._route("post", path, **kwargs)

    def delete(self, path: str, **kwargs):
        return self._route("delete", path, **kwargs)


def add_route_aliases(router) -> AliasedRouter:
    return AliasedRouter(router)


def get_all_aliases() -> Dict[str, List[str]]:
    return {k: list(v) for k, v in ENDPOINT_ALIASES.items()}


def get_endpoint_info() -> Dict[str, Any]:
    """Every primary path with its aliases"""
    return {
        "total_endpoints": len(ENDPOINT_ALIASES),
        "total_aliases": sum(len(a) for a in ENDPOINT_ALIASES.values()),
        "mappings": {
            primary: {"primary": primary, "aliases": aliases, "total_paths": 1 + len(aliases)}
            for primary, aliases in ENDPOINT_ALIASES.items()
        },
    }
