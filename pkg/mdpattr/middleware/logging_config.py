"""
Structured Logging Configuration

Sets up structlog for JSON logging in production.
"""

import logging
import sys
from typing import Optional, TextIO

import structlog

from mdpattr.config import settings


def setup_logging(stream: Optional[TextIO] = None):
    """
    Configure structured logging based on environment.

    Args:
        stream: Output stream. The HTTP service logs to stdout; the CLI passes
            stderr so that stdout carries only report output.
    """
    stream = stream or sys.stdout
    level = getattr(logging, settings.LOG_LEVEL.upper())

    # Determine if we're in production
    is_production = settings.ENVIRONMENT == "production"

    # Configure standard library logging
    logging.basicConfig(format="%(message)s", stream=stream, level=level)

    # Configure structlog
    processors = [
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
    ]

    if is_production:
        # JSON output for production (easier to parse in log aggregators)
        processors.append(structlog.processors.JSONRenderer())
    else:
        # Pretty console output for development
        processors.append(structlog.dev.ConsoleRenderer(colors=False))

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.make_filtering_bound_logger(level),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=stream),
        cache_logger_on_first_use=False,
    )


def get_logger(name: str = None):
    """Get a structlog logger instance."""
    return structlog.get_logger(name)


logger = get_logger("mdpattr")
