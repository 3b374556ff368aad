"""Helper utility functions."""

import logging
import math
import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

from robustrisk.utils.constants import ORACLE_DEFAULTS, SIGNIFICANT_DIGITS

# Load environment variables
load_dotenv()

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass(frozen=True)
class Settings:
    """Process-wide settings read from the environment."""

    threads: int = 1
    log_level: str = "WARNING"
    min_atoms: int = ORACLE_DEFAULTS["min_atoms"]


def _positive_int(name: str, default: int) -> int:
    raw = os.getenv(name, "")
    try:
        value = int(raw.strip())
    except ValueError:
        return default
    return value if value > 0 else default


def load_settings() -> Settings:
    """Read settings from environment variables.

    Invalid values fall back to their defaults rather than failing; the
    environment only tunes performance and verbosity.

    Returns:
        Settings instance
    """
    level = os.getenv("ROBUST_RISK_LOG_LEVEL", "WARNING").strip().upper()
    if level not in LOG_LEVELS:
        level = "WARNING"
    return Settings(
        threads=_positive_int("ROBUST_RISK_THREADS", 1),
        log_level=level,
        min_atoms=_positive_int("ROBUST_RISK_MIN_ATOMS", ORACLE_DEFAULTS["min_atoms"]),
    )


# Global settings instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get or create the global settings instance."""
    global _settings
    if _settings is None:
        _settings = load_settings()
    return _settings


def reset_settings():
    """Forget cached settings (used by tests that patch the environment)."""
    global _settings
    _settings = None


def configure_logging(level: Optional[str] = None):
    """Attach a single stderr handler to the package logger.

    Args:
        level: Level name; defaults to the configured settings level
    """
    logger = logging.getLogger("robustrisk")
    logger.setLevel(level or get_settings().log_level)
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s %(message)s"))
        logger.addHandler(handler)


def format_number(value: float) -> str:
    """Format a float with fixed significant digits, locale independent.

    Args:
        value: Number to format

    Returns:
        String such as '1.73205080757', 'inf' or '-inf'
    """
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if value == 0.0:
        return "0"
    return f"{value:.{SIGNIFICANT_DIGITS}g}"


def json_number(value: float):
    """Float for JSON output, non-finite values as strings."""
    value = float(value)
    if math.isinf(value) or math.isnan(value):
        return format_number(value)
    return float(format_number(value))
