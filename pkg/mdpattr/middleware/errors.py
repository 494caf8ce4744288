"""
Error Handling Middleware

Every error leaves the service in the envelope
{"error": {"code", "message", "details"}}; server-side failures go to Sentry.
"""

from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException
import sentry_sdk

from mdpattr.config import settings
from mdpattr.errors import MdpAttrError
from mdpattr.middleware.logging_config import logger


def _envelope(status: int, code: str, message: str, details: Optional[Any] = None) -> JSONResponse:
    error = {"code": code, "message": message}
    if details is not None:
        error["details"] = details
    return JSONResponse(status_code=status, content={"error": error})


def _report(exc: Exception) -> None:
    if settings.SENTRY_DSN:
        sentry_sdk.capture_exception(exc)


def setup_exception_handlers(app: FastAPI):
    """Register exception handlers for the FastAPI app."""

    @app.exception_handler(MdpAttrError)
    async def domain_exception_handler(request: Request, exc: MdpAttrError):
        """Analysis errors carry their own status and code."""
        if exc.http_status >= 500:
            logger.error("Request failed", path=request.url.path, code=exc.code, error=exc.message)
            _report(exc)
        else:
            logger.info("Request rejected", path=request.url.path, code=exc.code, error=exc.message)
        return JSONResponse(status_code=exc.http_status, content=exc.to_dict())

    @app.exception_handler(StarletteHTTPException)
    async def http_exception_handler(request: Request, exc: StarletteHTTPException):
        """Unknown routes and methods."""
        return _envelope(exc.status_code, f"HTTP_{exc.status_code}", str(exc.detail))

    @app.exception_handler(RequestValidationError)
    async def validation_exception_handler(request: Request, exc: RequestValidationError):
        """Malformed request bodies and query parameters, one entry per field."""
        fields = [
            {"field": ".".join(str(loc) for loc in error["loc"]), "message": error["msg"], "type": error["type"]}
            for error in exc.errors()
        ]
        return _envelope(422, "VALIDATION_ERROR", "Request validation failed", fields)

    @app.exception_handler(Exception)
    async def general_exception_handler(request: Request, exc: Exception):
        _report(exc)
        logger.error("Unhandled error", path=request.url.path, error=str(exc), type=type(exc).__name__)
        message = "internal error" if settings.ENVIRONMENT == "production" else f"{type(exc).__name__}: {exc}"
        return _envelope(500, "INTERNAL_ERROR", message)
