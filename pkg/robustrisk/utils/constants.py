"""Constants used throughout the application."""

# Application metadata
APP_NAME = "robustrisk"
APP_VERSION = "0.1.0"
APP_DESCRIPTION = "Worst-case convex risk measures on empirical return samples"

# Numerical tolerances
TOLERANCES = {
    "identity": 1e-9,       # formula identities
    "certificate": 1e-8,    # subgradient / membership certificates
    "normalization": 1e-10,  # E[dQ/dP] = 1
    "negative_weight": 1e-12,
    "spectrum_integral": 1e-12,
    "root": 1e-10,          # bisection on the decision variable
}

# Brute-force search defaults
ORACLE_DEFAULTS = {
    "seed": 0,
    "restarts": 32,
    "iterations": 2000,
    "step_decay": 0.95,
    "tolerance": 1e-4,
    "min_atoms": 512,
    "rejection_streak": 20,
}

# Output formatting
SIGNIFICANT_DIGITS = 12

# Process exit codes
EXIT_CODES = {
    "ok": 0,
    "violated": 1,
    "usage": 2,
    "io": 3,
    "internal": 4,
}

# Measure names accepted on the command line
MEASURE_NAMES = ("var", "es", "spectral", "expectile", "msd", "entropic", "shortfall")
UNCERTAINTY_NAMES = ("mean-variance", "wasserstein")
OUTPUT_FORMATS = ("json", "csv", "plain")
