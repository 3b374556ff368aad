"""Validated run configuration for one CLI invocation."""

from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from robustrisk.services.empirical import PNorm
from robustrisk.services.measures import (
    ESSpec,
    EntropicSpec,
    ExpectileSpec,
    MSDSpec,
    RiskMeasureSpec,
    ShortfallQuadraticSpec,
    SpectralFunction,
    SpectralSpec,
    VaRSpec,
)
from robustrisk.services.oracle import OracleConfig
from robustrisk.services.robust import MeanVariance, UncertaintySpec, WassersteinBall
from robustrisk.utils.constants import ORACLE_DEFAULTS

MeasureName = Literal["var", "es", "spectral", "expectile", "msd", "entropic", "shortfall"]

_REQUIRED = {
    "var": "alpha",
    "es": "alpha",
    "expectile": "alpha",
    "msd": "beta",
    "entropic": "gamma",
    "shortfall": "l0",
}


class RunConfig(BaseModel):
    """Everything a command needs, validated before any computation."""

    model_config = ConfigDict(frozen=True)

    command: Literal["risk", "worst-case", "verify"]
    input_path: Path
    measure: MeasureName
    alpha: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[float] = None
    l0: Optional[float] = None
    spectrum_path: Optional[Path] = None
    uncertainty: Optional[Literal["mean-variance", "wasserstein"]] = None
    p: float = 2.0
    eps: Optional[float] = None
    argmax_out: Optional[Path] = None
    output_format: Literal["json", "csv", "plain"] = "json"

    # Oracle settings (verify only)
    seed: int = Field(ORACLE_DEFAULTS["seed"], ge=0, lt=2**64)
    restarts: int = Field(ORACLE_DEFAULTS["restarts"], gt=0)
    iterations: int = Field(ORACLE_DEFAULTS["iterations"], gt=0)
    step_decay: float = Field(ORACLE_DEFAULTS["step_decay"], gt=0.0, lt=1.0)
    tolerance: float = Field(ORACLE_DEFAULTS["tolerance"], gt=0.0)
    min_atoms: Optional[int] = Field(None, gt=0)

    @model_validator(mode="after")
    def _check_parameters(self) -> "RunConfig":
        required = _REQUIRED.get(self.measure)
        if required and getattr(self, required) is None:
            raise ValueError(f"--{required.replace('_', '-')} is required for measure '{self.measure}'")
        if self.measure == "spectral" and self.spectrum_path is None:
            raise ValueError("--spectrum is required for measure 'spectral'")
        if self.measure != "spectral":
            # Range checks live in the measure constructors
            self.build_measure()
        if self.command != "risk":
            if self.uncertainty is None:
                raise ValueError("--set is required for this command")
            if self.uncertainty == "wasserstein":
                if self.eps is None:
                    raise ValueError("--eps is required for --set wasserstein")
                self.build_uncertainty()
        return self

    def build_measure(self, spectrum: Optional[SpectralFunction] = None) -> RiskMeasureSpec:
        """Construct the risk measure spec from the flags.

        Args:
            spectrum: Parsed spectrum file, required for 'spectral'

        Returns:
            RiskMeasureSpec
        """
        if self.measure == "var":
            return VaRSpec(alpha=self.alpha)
        if self.measure == "es":
            return ESSpec(alpha=self.alpha)
        if self.measure == "expectile":
            return ExpectileSpec(alpha=self.alpha)
        if self.measure == "msd":
            return MSDSpec(beta=self.beta)
        if self.measure == "entropic":
            return EntropicSpec(gamma=self.gamma)
        if self.measure == "shortfall":
            return ShortfallQuadraticSpec(l0=self.l0)
        if spectrum is None:
            raise ValueError("spectral measure needs a spectrum")
        return SpectralSpec(phi=spectrum)

    def build_uncertainty(self) -> Optional[UncertaintySpec]:
        if self.uncertainty is None:
            return None
        if self.uncertainty == "mean-variance":
            return MeanVariance()
        return WassersteinBall(norm=PNorm.from_p(self.p), eps=self.eps)

    def build_oracle(self) -> OracleConfig:
        extra = {} if self.min_atoms is None else {"min_atoms": self.min_atoms}
        return OracleConfig(
            seed=self.seed,
            restarts=self.restarts,
            iterations=self.iterations,
            step_decay=self.step_decay,
            tolerance=self.tolerance,
            **extra,
        )

    def params(self):
        """Scalar measure parameters given on the command line."""
        names = ("alpha", "beta", "gamma", "l0")
        return {name: getattr(self, name) for name in names if getattr(self, name) is not None}


def describe_validation_error(exc: ValidationError) -> str:
    """Flatten a pydantic error into one line, e.g. 'gamma must be > 0'."""
    messages = []
    for error in exc.errors():
        message = str(error.get("msg", "invalid value"))
        if message.startswith("Value error, "):
            message = message[len("Value error, "):]
            messages.append(message)
            continue
        location = ".".join(str(part) for part in error.get("loc", ()))
        messages.append(f"{location}: {message}" if location else message)
    return "; ".join(messages)
