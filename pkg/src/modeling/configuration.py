import os
from pydantic import BaseModel, Field
from typing import Any, Optional

from langchain_core.runnables import RunnableConfig

ENV_PREFIX = "SURROGATE_"


class Configuration(BaseModel):
    """Tunables for map fitting, oscillator fitting and PDF compilation."""

    degree: int = Field(
        default=3,
        ge=1,
        le=8,
        metadata={"description": "Total degree of the triangular polynomial map."},
    )

    ridge: float = Field(
        default=1e-4,
        ge=0.0,
        metadata={"description": "Ridge penalty on non-constant map coefficients."},
    )

    newton_tol: float = Field(
        default=1e-8,
        gt=0.0,
        metadata={"description": "Gradient infinity-norm at which Newton stops."},
    )

    newton_max_iter: int = Field(
        default=200,
        ge=1,
        metadata={"description": "Newton iteration cap per map component."},
    )

    monotone_grid: int = Field(
        default=512,
        ge=16,
        metadata={"description": "Grid points used to verify monotonicity per component."},
    )

    swarm: int = Field(
        default=40,
        ge=4,
        metadata={"description": "Particle swarm size for oscillator fits."},
    )

    pso_iters: int = Field(
        default=200,
        ge=1,
        metadata={"description": "Particle swarm iterations for oscillator fits."},
    )

    inertia: float = Field(default=0.7, metadata={"description": "PSO inertia weight."})
    cognitive: float = Field(default=1.5, metadata={"description": "PSO cognitive weight."})
    social: float = Field(default=1.5, metadata={"description": "PSO social weight."})

    polish: bool = Field(
        default=True,
        metadata={"description": "Refine the best particle with Nelder-Mead."},
    )

    acf_max_lag: int = Field(
        default=50,
        ge=1,
        metadata={"description": "Lags matched by the autocorrelation objective."},
    )

    max_concurrency: int = Field(
        default=4,
        ge=1,
        metadata={"description": "Bound on concurrently running fit tasks."},
    )

    clamp_warn_fraction: float = Field(
        default=0.01,
        ge=0.0,
        le=1.0,
        metadata={"description": "Clamp fraction above which generate() warns."},
    )

    variance_window: tuple[float, float] = Field(
        default=(0.5, 2.0),
        metadata={"description": "Acceptable variance of transformed channels."},
    )

    pdf_bins: int = Field(default=100, ge=2, metadata={"description": "Histogram bins."})
    pdf_smooth_bins: float = Field(
        default=2.0,
        ge=0.0,
        metadata={"description": "Gaussian smoothing width in bin widths."},
    )
    ci_level: float = Field(
        default=0.95,
        gt=0.0,
        lt=1.0,
        metadata={"description": "Confidence level of the adjusted-Wald band."},
    )

    @classmethod
    def from_runnable_config(
        cls, config: Optional[RunnableConfig] = None
    ) -> "Configuration":
        """Create a Configuration instance from a RunnableConfig."""
        configurable = (
            config["configurable"] if config and "configurable" in config else {}
        )

        # Explicit configurable values win; the environment fills the gaps
        raw_values: dict[str, Any] = {
            name: (
                configurable[name]
                if configurable.get(name) is not None
                else os.environ.get(ENV_PREFIX + name.upper())
            )
            for name in cls.model_fields.keys()
        }

        # Filter out None values
        values = {k: v for k, v in raw_values.items() if v is not None}
        if isinstance(values.get("variance_window"), str):
            lo, hi = values["variance_window"].split(",")
            values["variance_window"] = (float(lo), float(hi))

        return cls(**values)

    @classmethod
    def from_overrides(cls, **overrides: Any) -> "Configuration":
        """Resolve a configuration with `overrides` acting as the configurable dict."""
        clean = {k: v for k, v in overrides.items() if v is not None}
        return cls.from_runnable_config({"configurable": clean})
