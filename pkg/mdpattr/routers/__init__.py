"""API Routers package."""

from mdpattr.routers import analysis, examples, health

__all__ = ["analysis", "examples", "health"]
