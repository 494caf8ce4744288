"""Middleware package for logging and error handling."""

from mdpattr.middleware.errors import setup_exception_handlers

__all__ = ["setup_exception_handlers"]
