"""
Application configuration loaded from environment variables.
"""
import logging
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

# Load environment variables from .env file
env_path = Path(__file__).parent.parent / ".env"
load_dotenv(dotenv_path=env_path)


def _optional_int(name: str) -> Optional[int]:
    raw = os.getenv(name, "").strip()
    return int(raw) if raw else None


class Settings:
    """Application settings."""

    # Seed override for run/compare (HIERSIM_SEED)
    SEED: Optional[int] = _optional_int("HIERSIM_SEED")

    # Logging
    LOG_LEVEL: str = os.getenv("HIERSIM_LOG_LEVEL", "INFO")

    # Outputs
    OUTPUT_DIR: str = os.getenv("HIERSIM_OUTPUT_DIR", "runs")

    # compare runs its variants on a small thread pool
    MAX_WORKERS: int = int(os.getenv("HIERSIM_MAX_WORKERS", "3"))


settings = Settings()


def configure_logging(level: Optional[str] = None) -> None:
    """Configure root logging once for the CLI and the API."""
    logging.basicConfig(
        level=(level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
