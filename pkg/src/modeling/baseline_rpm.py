"""
Random phase model baseline.

The spectral density on the Welch grid [0, omega_s/2] is rescaled linearly to
nu in [0, 2 pi) with nu = scale * omega, scale = 2 dt, and renormalized so that
the integral of rho over [0, 2 pi) equals the variance. The band is cut into
m + 1 random cells; each carries one cosine of amplitude sqrt(2 rho dnu) and a
uniform random phase.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from src.modeling.errors import ConfigurationError
from src.modeling.oscillator import SeedLike
from src.modeling.seeding import STREAM_RPM, as_rng, channel_rng
from src.modeling.spectral import SpectralDensity
from src.modeling.timeseries import Moments, TimeSeries, moments

logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi
REALIZATION = "sqrt2-real-part"
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class RandomPhaseModel:
    """Cells on [0, 2 pi): `omegas` are cell centers in nu units."""

    edges: np.ndarray
    omegas: np.ndarray
    amps: np.ndarray
    phases: np.ndarray
    frequency_scale: float

    def __post_init__(self) -> None:
        e = np.asarray(self.edges, dtype=float)
        if e[0] != 0.0 or e[-1] != TWO_PI or np.any(np.diff(e) < 0):
            raise ConfigurationError("cell edges must ascend from 0 to 2*pi")
        if not (e.size - 1 == self.omegas.size == self.amps.size == self.phases.size):
            raise ConfigurationError("one center, amplitude and phase per cell required")
        if np.any(self.amps < 0):
            raise ConfigurationError("amplitudes must be nonnegative")

    @property
    def angular_frequencies(self) -> np.ndarray:
        """Cell centers in rad/s."""
        return self.omegas / self.frequency_scale

    @property
    def variance(self) -> float:
        return float(np.sum(self.amps**2))


def density_on_unit_circle(rho: SpectralDensity, nu: np.ndarray, scale: float) -> np.ndarray:
    """rho(nu) = S(nu / scale) / (pi * scale)."""
    return rho.interpolate(np.asarray(nu) / scale) / (math.pi * scale)


def build_rpm(rho: SpectralDensity, m: int, rng_seed: SeedLike = None) -> RandomPhaseModel:
    """Random cells, spectrally consistent amplitudes and uniform phases."""
    if m < 1:
        raise ConfigurationError(f"m must be >= 1, got {m}")
    if np.any(rho.values < 0):
        raise ConfigurationError("spectral density must be nonnegative")
    rng = as_rng(rng_seed)
    scale = 2 * rho.dt
    edges = np.concatenate([[0.0], np.sort(rng.uniform(0.0, TWO_PI, m)), [TWO_PI]])
    centers = 0.5 * (edges[:-1] + edges[1:])
    widths = np.diff(edges)
    amps = np.sqrt(density_on_unit_circle(rho, centers, scale) * widths)
    phases = rng.uniform(0.0, TWO_PI, m + 1)
    return RandomPhaseModel(edges=edges, omegas=centers, amps=amps, phases=phases, frequency_scale=scale)


def evaluate_rpm(model: RandomPhaseModel, t: np.ndarray) -> np.ndarray:
    """g(t) = sum_j sqrt(2) a_j cos(w_j t + z_j) at times `t` (seconds)."""
    t = np.asarray(t, dtype=float)
    w = model.angular_frequencies
    amp = math.sqrt(2) * model.amps
    out = np.empty(t.size)
    chunk = max(_CHUNK_ELEMENTS // max(w.size, 1), 1)
    for s in range(0, t.size, chunk):
        tt = t[s : s + chunk]
        out[s : s + chunk] = np.cos(np.outer(tt, w) + model.phases) @ amp
    return out


def rpm_realization(model: RandomPhaseModel, n_samples: int, dt: float, name: str = "g") -> TimeSeries:
    return TimeSeries(evaluate_rpm(model, np.arange(n_samples) * dt)[:, None], dt, (name,))


@dataclass(frozen=True)
class RpmStudyRow:
    n: int
    moments: Moments
    target_variance: float


def rpm_gaussianization_study(
    rho: SpectralDensity,
    n_list: Sequence[int],
    horizon: float,
    seed: int = 0,
    realizations: Optional[List[np.ndarray]] = None,
) -> List[RpmStudyRow]:
    """Moments of one realization per cell count n over `horizon` seconds.

    The n-th model uses the stream (STREAM_RPM, position in `n_list`). When
    `realizations` is a list the realized signals are appended to it.
    """
    n_samples = max(int(round(horizon / rho.dt)), 4)
    rows = []
    for i, n in enumerate(n_list):
        model = build_rpm(rho, int(n), channel_rng(seed, STREAM_RPM, i))
        g = evaluate_rpm(model, np.arange(n_samples) * rho.dt)
        mom = moments(g)
        logger.info(f"rpm n={n}: skew={mom.skewness:.4f} excess kurtosis={mom.excess_kurtosis:.4f}")
        rows.append(RpmStudyRow(n=int(n), moments=mom, target_variance=model.variance))
        if realizations is not None:
            realizations.append(g)
    return rows
