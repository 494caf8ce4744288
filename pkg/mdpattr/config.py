"""
Application Configuration

Loads settings from environment variables (prefix MDPATTR_) with sensible defaults.
"""

from typing import List, Optional

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load .env file into os.environ BEFORE creating settings
load_dotenv()


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="MDPATTR_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # App
    VERSION: str = "0.3.0"
    ENVIRONMENT: str = "development"  # development, staging, production
    DEBUG: bool = False

    # Sentry
    SENTRY_DSN: str = ""

    # Logging
    LOG_LEVEL: str = "INFO"

    # Encodings
    EPSILON: float = 1e-4  # minimum Pr(reach t) of admissible strategies
    BIG_M: float = 1e16

    # Exact search budget
    SEARCH_NODE_LIMIT: int = 10**7
    SEARCH_TIME_LIMIT_S: float = 600.0

    # Brute-force oracle guard (number of deterministic strategies)
    ENUMERATION_LIMIT: int = 10**6

    # Batch
    BATCH_JOBS: int = 1

    # External solver solutions for cross-checks
    SOLVER_SOLUTION_DIR: Optional[str] = None

    # CORS - stored as string, parsed by property
    CORS_ORIGINS: str = "http://localhost:3000,http://localhost:5173,http://localhost:8000"

    @property
    def cors_origins_list(self) -> List[str]:
        """Parse CORS_ORIGINS as comma-separated list."""
        if not self.CORS_ORIGINS:
            return []
        return [origin.strip() for origin in self.CORS_ORIGINS.split(",") if origin.strip()]


# Create settings instance
settings = Settings()
