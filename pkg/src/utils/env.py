# src/utils/env.py
import logging
import os
import pathlib

from dotenv import load_dotenv

LOG_ENV_VAR = "RIDGELINE_LOG"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

_VALID_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def load_env() -> None:
    """Load .env from the project root, falling back to the default search."""
    root = pathlib.Path(__file__).resolve().parents[2]
    env_path = root / ".env"
    if env_path.exists():
        load_dotenv(env_path)
    else:
        load_dotenv()


def resolve_log_level(default: str = "INFO") -> int:
    """
    Read RIDGELINE_LOG and turn it into a logging level.

    Unknown values fall back to the default rather than failing the run.
    """
    raw = (os.getenv(LOG_ENV_VAR) or default).strip().upper()
    if raw not in _VALID_LEVELS:
        raw = default
    return getattr(logging, raw)


def configure_logging(default: str = "INFO") -> int:
    """Load the environment and configure the root logger once per process."""
    load_env()
    level = resolve_log_level(default)
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)
    return level
