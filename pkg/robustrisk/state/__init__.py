"""Run configuration state."""

from robustrisk.state.run_config import RunConfig
