"""robustrisk: worst-case convex risk measures on empirical return samples."""

from robustrisk.utils.constants import APP_VERSION

__version__ = APP_VERSION
