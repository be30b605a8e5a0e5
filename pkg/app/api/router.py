"""
Main API router combining all endpoints
"""

from fastapi import APIRouter

from app.api.endpoints import regulation, health, config, status

api_router = APIRouter()

# base_router keeps aliases registered alongside primary paths
api_router.include_router(regulation.base_router, tags=["Regulation"])
api_router.include_router(health.base_router, tags=["Health"])
api_router.include_router(config.base_router, tags=["Configuration"])
api_router.include_router(status.base_router, tags=["Status"])
