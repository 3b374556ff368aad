"""Utility modules for robustrisk."""

from robustrisk.utils.helpers import format_number, get_settings
