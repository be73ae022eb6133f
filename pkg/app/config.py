"""
Runtime settings and logging setup.

Settings are read from the environment (prefix ``MSMP_``) and an optional
``.env`` file in the working directory.
"""
import logging
from functools import lru_cache
from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class Settings(BaseSettings):
    """Process-wide settings."""

    model_config = SettingsConfigDict(
        env_prefix="MSMP_",
        env_file=".env",
        extra="ignore"
    )

    data_dir: Path = Path("data")
    output_dir: Path = Path("runs")
    threads: int = 1
    log_level: str = "INFO"


@lru_cache
def get_settings() -> Settings:
    """Cached settings instance."""
    return Settings()


def configure_logging(level: str | None = None) -> None:
    """
    Configure root logging for an entry point.

    Args:
        level: Level name; defaults to the ``MSMP_LOG_LEVEL`` setting
    """
    logging.basicConfig(
        level=(level or get_settings().log_level).upper(),
        format=LOG_FORMAT
    )
