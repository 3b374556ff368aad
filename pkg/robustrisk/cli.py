"""Command-line interface.

    python -m robustrisk risk --input returns.csv --measure es --alpha 0.05
    python -m robustrisk worst-case --input returns.csv --measure msd --beta 0.5 --set wasserstein --p 2 --eps 0.1
    python -m robustrisk verify --input returns.csv --measure es --alpha 0.25 --set mean-variance --seed 7

Exit codes: 0 success or CONFIRMED (SLACK warns on stderr), 1 VIOLATED,
2 usage or validation error, 3 I/O error, 4 internal error (a constructed
maximizer or certificate failed its own check).
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional, Tuple

from pydantic import ValidationError

from robustrisk.services import io as report_io
from robustrisk.services import oracle as oracle_service
from robustrisk.services.empirical import EmpiricalDistribution, mean, std
from robustrisk.services.errors import CertificateError, RobustRiskError
from robustrisk.services.measures import RiskMeasureSpec, evaluate
from robustrisk.services.robust import WassersteinBall, worst_case
from robustrisk.state.run_config import RunConfig, describe_validation_error
from robustrisk.utils.constants import (
    APP_DESCRIPTION,
    APP_NAME,
    APP_VERSION,
    EXIT_CODES,
    MEASURE_NAMES,
    ORACLE_DEFAULTS,
    OUTPUT_FORMATS,
    UNCERTAINTY_NAMES,
)
from robustrisk.utils.helpers import configure_logging

logger = logging.getLogger(__name__)

Payload = Dict[str, Any]


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser with the three subcommands."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", dest="input_path", required=True, help="returns file, one value per line")
    common.add_argument("--measure", required=True, choices=MEASURE_NAMES)
    common.add_argument("--alpha", type=float, help="level for var, es and expectile")
    common.add_argument("--beta", type=float, help="semi-deviation weight for msd")
    common.add_argument("--gamma", type=float, help="risk aversion for entropic")
    common.add_argument("--l0", type=float, help="loss threshold for shortfall")
    common.add_argument("--spectrum", dest="spectrum_path", help="CSV of u_start,u_end,phi rows")
    common.add_argument("--format", dest="output_format", default="json", choices=OUTPUT_FORMATS)

    robust_flags = argparse.ArgumentParser(add_help=False)
    robust_flags.add_argument("--set", dest="uncertainty", choices=UNCERTAINTY_NAMES)
    robust_flags.add_argument("--p", type=float, default=2.0, help="Wasserstein order, a number >= 1 or 'inf'")
    robust_flags.add_argument("--eps", type=float, help="Wasserstein radius")
    robust_flags.add_argument("--argmax-out", dest="argmax_out", help="write the maximizer, one value per line")

    search_flags = argparse.ArgumentParser(add_help=False)
    search_flags.add_argument("--seed", type=int, default=ORACLE_DEFAULTS["seed"])
    search_flags.add_argument("--restarts", type=int, default=ORACLE_DEFAULTS["restarts"])
    search_flags.add_argument("--iterations", type=int, default=ORACLE_DEFAULTS["iterations"])
    search_flags.add_argument("--step-decay", dest="step_decay", type=float, default=ORACLE_DEFAULTS["step_decay"])
    search_flags.add_argument("--tolerance", type=float, default=ORACLE_DEFAULTS["tolerance"])
    # Unset falls through to ROBUST_RISK_MIN_ATOMS, then ORACLE_DEFAULTS
    search_flags.add_argument("--min-atoms", dest="min_atoms", type=int)

    parser = argparse.ArgumentParser(prog=APP_NAME, description=APP_DESCRIPTION)
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION}")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("risk", parents=[common], help="base risk of the sample")
    commands.add_parser("worst-case", parents=[common, robust_flags], help="closed-form worst case")
    commands.add_parser("verify", parents=[common, robust_flags, search_flags],
                        help="certify the closed form with the brute-force oracle")
    return parser


# ============================================================================
# COMMANDS
# ============================================================================


def _header(config: RunConfig) -> Payload:
    payload: Payload = {"command": config.command, "measure": config.measure}
    payload.update(config.params())
    if config.spectrum_path is not None:
        payload["spectrum"] = str(config.spectrum_path)
    return payload


def _set_fields(config: RunConfig) -> Payload:
    fields: Payload = {"set": config.uncertainty}
    if config.uncertainty == "wasserstein":
        fields["p"] = float(config.p)
        fields["eps"] = float(config.eps)
    return fields


def cmd_risk(config: RunConfig, spec: RiskMeasureSpec, d: EmpiricalDistribution) -> Tuple[Payload, int]:
    """Base risk with summary statistics."""
    value = evaluate(spec, d)
    payload = _header(config)
    payload.update({
        "value": value,
        "n": d.n,
        "mean": mean(d),
        "std": std(d),
        "acceptable": value <= 0.0,
    })
    return payload, EXIT_CODES["ok"]


def cmd_worst_case(config: RunConfig, spec: RiskMeasureSpec, d: EmpiricalDistribution) -> Tuple[Payload, int]:
    """Closed-form worst case and its maximizer."""
    result = worst_case(spec, d, config.build_uncertainty())
    if config.argmax_out is not None:
        report_io.write_values(config.argmax_out, result.argmax)
    payload = _header(config)
    payload.update(_set_fields(config))
    payload.update({
        "value": result.value,
        "base_value": result.base_value,
        "premium": result.premium,
        "norm_term": result.norm_term,
        "argmax_value": result.argmax_value,
        "discretization_gap": result.discretization_gap,
        "tight": result.tight,
        "n": d.n,
        "argmax_n": result.argmax.n,
        "argmax_min": float(result.argmax.values[0]),
        "argmax_max": float(result.argmax.values[-1]),
    })
    return payload, EXIT_CODES["ok"]


def cmd_verify(config: RunConfig, spec: RiskMeasureSpec, d: EmpiricalDistribution) -> Tuple[Payload, int]:
    """Run the oracle against the closed form."""
    uncertainty = config.build_uncertainty()
    cfg = config.build_oracle()
    if isinstance(uncertainty, WassersteinBall):
        report = oracle_service.oracle_wasserstein(spec, d, uncertainty.norm, uncertainty.eps, cfg)
    else:
        report = oracle_service.oracle_mean_variance(spec, d, cfg)
    if config.argmax_out is not None:
        report_io.write_values(config.argmax_out, report.best_point)

    payload = _header(config)
    payload.update(_set_fields(config))
    payload.update({
        "closed_form_value": report.closed_form_value,
        "best_value": report.best_value,
        "gap": report.gap,
        "verdict": report.verdict.value,
        "tolerance": report.tolerance,
        "allowance": report.allowance,
        "atoms": report.atoms,
        "restarts": report.restarts,
        "seed": report.seed,
    })
    if report.verdict is oracle_service.Verdict.VIOLATED:
        return payload, EXIT_CODES["violated"]
    if report.verdict is oracle_service.Verdict.SLACK:
        print(f"warning: closed form exceeds the best search value by {report.gap:.3g}", file=sys.stderr)
    return payload, EXIT_CODES["ok"]


COMMANDS = {
    "risk": cmd_risk,
    "worst-case": cmd_worst_case,
    "verify": cmd_verify,
}


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CODES["usage"]

    configure_logging()
    try:
        config = RunConfig(**{key: value for key, value in vars(args).items() if value is not None})
        spectrum = report_io.read_spectrum(config.spectrum_path) if config.measure == "spectral" else None
        spec = config.build_measure(spectrum)
        d = report_io.read_returns(config.input_path)
        logger.info("[CLI] %s %s on %d atoms", config.command, spec.name, d.n)
        payload, code = COMMANDS[config.command](config, spec, d)
    except ValidationError as exc:
        return _fail(describe_validation_error(exc), EXIT_CODES["usage"])
    except CertificateError as exc:
        logger.error("[CLI] internal certificate failure: %s", exc)
        return _fail(f"internal error: {exc}", EXIT_CODES["internal"])
    except RobustRiskError as exc:
        return _fail(str(exc), EXIT_CODES["usage"])
    except OSError as exc:
        return _fail(f"{exc.strerror or exc}: {exc.filename}", EXIT_CODES["io"])

    sys.stdout.write(report_io.render(payload, config.output_format))
    return code


if __name__ == "__main__":
    sys.exit(main())
