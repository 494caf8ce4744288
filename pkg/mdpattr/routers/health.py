"""
Health Check Router

Endpoint for monitoring and readiness checks.
"""

from datetime import datetime, timezone

from fastapi import APIRouter

from mdpattr.config import settings
from mdpattr.models.responses import HealthResponse

router = APIRouter()


@router.get("/health", response_model=HealthResponse)
async def health_check() -> HealthResponse:
    """
    Health check endpoint for monitoring services.

    Returns the API status, version, and current timestamp.
    """
    return HealthResponse(
        status="healthy",
        version=settings.VERSION,
        environment=settings.ENVIRONMENT,
        timestamp=datetime.now(timezone.utc),
    )
