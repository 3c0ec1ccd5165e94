"""Reference data: Lorenz-96 trajectories and oscillators seen through known cubics."""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.modeling.errors import ConfigurationError, IntegrationError
from src.modeling.oscillator import OscillatorParams, simulate
from src.modeling.seeding import STREAM_LORENZ, STREAM_SYNTH, channel_rng
from src.modeling.timeseries import TimeSeries

logger = logging.getLogger(__name__)

HEAVY_TAIL_CUBIC = (0.0, 1.0, 0.0, 0.1)


class Lorenz96Config(BaseModel):
    """Integration and sampling settings for Lorenz-96."""

    K: int = Field(default=40, ge=4, description="Number of sites (cyclic)")
    F: float = Field(default=8.0, description="Forcing")
    dt: float = Field(default=0.01, gt=0, description="RK4 step")
    sample_dt: float = Field(default=0.1, gt=0, description="Recording interval")
    T: float = Field(default=1000.0, gt=0, description="Recorded duration after the transient")
    transient: float = Field(default=100.0, ge=0, description="Discarded spin-up duration")
    seed: int = Field(default=0, ge=0, description="Seed of the initial perturbation")
    perturbation: float = Field(default=1e-3, ge=0, description="Size of the kick on x_1")

    @model_validator(mode="after")
    def _check_sampling(self) -> "Lorenz96Config":
        ratio = self.sample_dt / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise ValueError(f"sample_dt={self.sample_dt} must be an integer multiple of dt={self.dt}")
        return self

    @property
    def steps_per_sample(self) -> int:
        return int(round(self.sample_dt / self.dt))


def lorenz96_rhs(x: np.ndarray, F: float) -> np.ndarray:
    """dx_k/dt = (x_{k+1} - x_{k-2}) x_{k-1} - x_k + F, cyclic."""
    x = np.asarray(x, dtype=float)
    if x.size < 4:
        raise ConfigurationError(f"Lorenz-96 needs K >= 4, got {x.size}")
    return (np.roll(x, -1) - np.roll(x, 2)) * np.roll(x, 1) - x + F


def rk4_step(x: np.ndarray, F: float, dt: float) -> np.ndarray:
    k1 = lorenz96_rhs(x, F)
    k2 = lorenz96_rhs(x + 0.5 * dt * k1, F)
    k3 = lorenz96_rhs(x + 0.5 * dt * k2, F)
    k4 = lorenz96_rhs(x + dt * k3, F)
    return x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def initial_condition(cfg: Lorenz96Config) -> np.ndarray:
    """F * ones with a seeded kick on the first site (none when perturbation is 0)."""
    x0 = np.full(cfg.K, cfg.F, dtype=float)
    rng = channel_rng(cfg.seed, STREAM_LORENZ)
    x0[0] += cfg.perturbation * rng.uniform(0.5, 1.5)
    return x0


def integrate(x0: np.ndarray, F: float, dt: float, n_steps: int, t0: float = 0.0) -> np.ndarray:
    """Advance x0 by n_steps RK4 steps; IntegrationError carries the first non-finite time."""
    x = np.array(x0, dtype=float)
    for i in range(n_steps):
        x = rk4_step(x, F, dt)
        if not np.isfinite(x).all():
            raise IntegrationError("Lorenz-96 state became non-finite", t0 + (i + 1) * dt)
    return x


def simulate_lorenz96(cfg: Lorenz96Config, observe: Optional[Sequence[int]] = None) -> TimeSeries:
    """Record sites `observe` (1-based, default [1]) every sample_dt after the transient."""
    observe = [1] if observe is None else [int(o) for o in observe]
    if any(not 1 <= o <= cfg.K for o in observe):
        raise ConfigurationError(f"observed sites must lie in [1, {cfg.K}], got {observe}")
    cols = [o - 1 for o in observe]
    x = initial_condition(cfg)
    n_transient = int(round(cfg.transient / cfg.dt))
    x = integrate(x, cfg.F, cfg.dt, n_transient)
    n_samples = int(round(cfg.T / cfg.sample_dt))
    if n_samples < 2:
        raise ConfigurationError(f"T={cfg.T} gives fewer than 2 samples at sample_dt={cfg.sample_dt}")
    stride = cfg.steps_per_sample
    out = np.empty((n_samples, len(cols)))
    t = cfg.transient
    for i in range(n_samples):
        out[i] = x[cols]
        x = integrate(x, cfg.F, cfg.dt, stride, t)
        t += cfg.sample_dt
    logger.info(f"Lorenz-96 K={cfg.K} F={cfg.F}: recorded {n_samples} samples of sites {observe}")
    return TimeSeries(out, cfg.sample_dt, tuple(f"x{o}" for o in observe))


# ---------------------- Synthetic records ----------------------

def apply_cubic(z: np.ndarray, coeffs: Sequence[float]) -> np.ndarray:
    c0, c1, c2, c3 = coeffs
    return c0 + c1 * z + c2 * z**2 + c3 * z**3


def simulate_oscillator_through_cubic(
    params: OscillatorParams,
    coeffs: Sequence[float],
    T: float,
    dt: float,
    seed: int = 0,
) -> Tuple[TimeSeries, TimeSeries]:
    """(y, z): an oscillator path z and its image y under a monotone cubic."""
    c0, c1, c2, c3 = (float(c) for c in coeffs)
    # y' = c1 + 2 c2 z + 3 c3 z^2 must stay positive
    increasing = (c3 > 0 and c2 * c2 < 3 * c1 * c3) or (c3 == 0 and c2 == 0 and c1 > 0)
    if not increasing:
        raise ConfigurationError(f"cubic {list(coeffs)} is not strictly increasing")
    z = simulate(params, T, dt, channel_rng(seed, STREAM_SYNTH), name="z")
    y = apply_cubic(z.values[:, 0], (c0, c1, c2, c3))
    return TimeSeries(y[:, None], dt, ("y",)), z


def synth_heavy_tail(
    T: float,
    dt: float,
    seed: int = 0,
    params: Optional[OscillatorParams] = None,
) -> TimeSeries:
    """y = z + 0.1 z^3 with z a unit-variance oscillator path."""
    params = params or OscillatorParams.from_k_beta(10.0, 1.0)
    y, _ = simulate_oscillator_through_cubic(params, HEAVY_TAIL_CUBIC, T, dt, seed)
    return y


def heavy_tail_inverse(y: np.ndarray) -> np.ndarray:
    """Real root z of z + 0.1 z^3 = y (Cardano)."""
    y = np.asarray(y, dtype=float)
    # z^3 + 10 z - 10 y = 0
    half_q = -5.0 * y
    disc = np.sqrt(half_q**2 + (10.0 / 3.0) ** 3)
    return np.cbrt(-half_q + disc) + np.cbrt(-half_q - disc)
