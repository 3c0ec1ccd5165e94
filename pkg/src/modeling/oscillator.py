"""
Stochastic linear oscillator  q'' + beta q' + k q = sqrt(2D) dW/dt.

With D = k*beta the stationary displacement has unit variance. Trajectories
use the exact Gaussian transition of the linear system, so there is no
step-size bias.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import linalg, signal
from scipy.integrate import trapezoid

from src.modeling.configuration import Configuration
from src.modeling.errors import ConfigurationError, FitError
from src.modeling.pso import minimize_pso
from src.modeling.seeding import as_rng
from src.modeling.spectral import SpectralDensity
from src.modeling.timeseries import TimeSeries

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.Generator, None]

CONSTRAINT_RTOL = 1e-9
CRITICAL_RTOL = 1e-9


@dataclass(frozen=True)
class OscillatorParams:
    k: float
    beta: float
    D: float

    def __post_init__(self) -> None:
        for name in ("k", "beta", "D"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v <= 0:
                raise ConfigurationError(f"oscillator {name} must be positive and finite, got {v}")
            object.__setattr__(self, name, v)
        if abs(self.D - self.k * self.beta) > CONSTRAINT_RTOL * self.k * self.beta:
            raise ConfigurationError(
                f"unit-variance constraint violated: D={self.D!r} but k*beta={self.k * self.beta!r}"
            )

    @classmethod
    def from_k_beta(cls, k: float, beta: float) -> "OscillatorParams":
        return cls(k=float(k), beta=float(beta), D=float(k) * float(beta))

    @property
    def noise_amplitude(self) -> float:
        """sqrt(2D)."""
        return math.sqrt(2 * self.D)

    @property
    def regime(self) -> str:
        disc = self.k - self.beta**2 / 4
        if abs(disc) < CRITICAL_RTOL * self.k:
            return "critical"
        return "underdamped" if disc > 0 else "overdamped"

    def as_dict(self) -> dict:
        return {"k": self.k, "beta": self.beta, "D": self.D}


@dataclass(frozen=True)
class OscillatorState:
    q: float
    qdot: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.q) and math.isfinite(self.qdot)):
            raise ConfigurationError("oscillator state must be finite")


@dataclass(frozen=True)
class OscillatorFit:
    """Result of a spectral or autocorrelation fit."""

    params: OscillatorParams
    delta: float
    method: str
    n_evals: int
    polished: bool


def analytic_psd(p: OscillatorParams, omega: np.ndarray, omega_s: Optional[float] = None) -> SpectralDensity:
    """S(w) = 2D / ((k - w^2)^2 + beta^2 w^2) on a nonnegative ascending grid."""
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 1 or (omega.size and omega[0] < 0):
        raise ConfigurationError("omega grid must be 1-D and nonnegative")
    w2 = omega**2
    values = 2 * p.D / ((p.k - w2) ** 2 + p.beta**2 * w2)
    omega_s = 2 * float(omega[-1]) if omega_s is None else omega_s
    return SpectralDensity(omega=omega, values=values, omega_s=omega_s)


def analytic_autocorrelation(p: OscillatorParams, lags: np.ndarray) -> np.ndarray:
    """Normalized displacement autocorrelation at time lags (seconds)."""
    tau = np.abs(np.asarray(lags, dtype=float))
    g = p.beta / 2
    disc = p.k - g**2
    if abs(disc) < CRITICAL_RTOL * p.k:
        return np.exp(-g * tau) * (1 + g * tau)
    if disc > 0:
        wd = math.sqrt(disc)
        return np.exp(-g * tau) * (np.cos(wd * tau) + g / wd * np.sin(wd * tau))
    s = math.sqrt(-disc)
    slow, fast = g - s, g + s
    return (fast * np.exp(-slow * tau) - slow * np.exp(-fast * tau)) / (fast - slow)


def sample_stationary(p: OscillatorParams, rng_seed: SeedLike = None) -> OscillatorState:
    """Draw (q, q') from the stationary law N(0, D/(beta k)) x N(0, D/beta)."""
    rng = as_rng(rng_seed)
    z = rng.standard_normal(2)
    return OscillatorState(
        q=float(z[0] * math.sqrt(p.D / (p.beta * p.k))),
        qdot=float(z[1] * math.sqrt(p.D / p.beta)),
    )


def transition(p: OscillatorParams, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Exact one-step transition (Phi, Q) of the oscillator state over `dt`.

    Uses the augmented matrix exponential of [[-A, BB^T], [0, A^T]] dt.
    """
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    a = np.array([[0.0, 1.0], [-p.k, -p.beta]])
    bbt = np.array([[0.0, 0.0], [0.0, 2 * p.D]])
    aug = np.zeros((4, 4))
    aug[:2, :2] = -a
    aug[:2, 2:] = bbt
    aug[2:, 2:] = a.T
    e = linalg.expm(aug * dt)
    phi = e[2:, 2:].T
    q = phi @ e[:2, 2:]
    return phi, 0.5 * (q + q.T)


def _noise_factor(q: np.ndarray) -> np.ndarray:
    # eigen square root stays valid when Q is singular (D -> 0 or tiny dt)
    w, v = np.linalg.eigh(q)
    return v * np.sqrt(np.clip(w, 0.0, None))


def simulate(
    p: OscillatorParams,
    T: float,
    dt: float,
    rng_seed: SeedLike = None,
    initial: Optional[OscillatorState] = None,
    noise_free: bool = False,
    name: str = "q",
) -> TimeSeries:
    """Sample q on t = 0, dt, ..., (n-1) dt with n = round(T/dt).

    Starts from `initial` or from a stationary draw. `noise_free` drops the
    forcing and gives the homogeneous solution.
    """
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if T < dt * (1 - 1e-12):
        raise ConfigurationError(f"duration T={T} is shorter than dt={dt}")
    n = max(int(round(T / dt)), 1)
    rng = as_rng(rng_seed)
    state = initial if initial is not None else sample_stationary(p, rng)
    phi, q_cov = transition(p, dt)
    if noise_free:
        xi = np.zeros((n - 1, 2))
    else:
        xi = rng.standard_normal((n - 1, 2)) @ _noise_factor(q_cov).T
    out = np.empty(n)
    out[0] = state.q
    if n == 1:
        return TimeSeries(values=out[:, None], dt=dt, names=(name,))
    p00, p01, _, p11 = (float(v) for v in phi.ravel())
    out[1] = p00 * state.q + p01 * state.qdot + xi[0, 0]
    if n > 2:
        # eliminating qdot via Cayley-Hamilton leaves an AR(2) recursion in q
        a = np.array([1.0, -(p00 + p11), float(np.linalg.det(phi))])
        drive = xi[1:, 0] - p11 * xi[:-1, 0] + p01 * xi[:-1, 1]
        zi = signal.lfiltic([1.0], a, y=[out[1], out[0]])
        out[2:], _ = signal.lfilter([1.0], a, drive, zi=zi)
    return TimeSeries(values=out[:, None], dt=dt, names=(name,))


# ---------------------- Fitting ----------------------

def _log_bounds(omega_s: float) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    return (
        (math.log(1e-3), math.log((omega_s / 2) ** 2 * 4)),
        (math.log(1e-3), math.log(omega_s * 4)),
    )


def _psd_objective(s_data: SpectralDensity) -> Callable[[np.ndarray], float]:
    omega = s_data.omega
    values = s_data.values
    if omega.size < 2 or not np.all(np.isfinite(values)) or trapezoid(values, omega) <= 0:
        raise FitError("spectrum has no power to fit")
    w2 = omega**2

    def delta(x: np.ndarray) -> float:
        k, beta = math.exp(x[0]), math.exp(x[1])
        model = 2 * k * beta / ((k - w2) ** 2 + beta**2 * w2)
        return float(trapezoid(np.abs(model - values), omega))

    return delta


def grid_search_oscillator(s_data: SpectralDensity, n: int = 100) -> OscillatorFit:
    """Best (k, beta) on an n x n log-spaced grid over the swarm's search box."""
    if n < 2:
        raise ConfigurationError(f"grid needs n >= 2, got {n}")
    delta = _psd_objective(s_data)
    (k_lo, k_hi), (b_lo, b_hi) = _log_bounds(s_data.omega_s)
    best_x, best_f = np.zeros(2), math.inf
    for lk in np.linspace(k_lo, k_hi, n):
        for lb in np.linspace(b_lo, b_hi, n):
            x = np.array([lk, lb])
            f = delta(x)
            if f < best_f:
                best_x, best_f = x, f
    params = OscillatorParams.from_k_beta(math.exp(best_x[0]), math.exp(best_x[1]))
    logger.info(f"oscillator grid search ({n}x{n}): k={params.k:.4f} beta={params.beta:.4f} delta={best_f:.4e}")
    return OscillatorFit(params=params, delta=best_f, method="grid", n_evals=n * n, polished=False)


def fit_oscillator_report(
    s_data: SpectralDensity,
    method: str = "pso",
    rng_seed: SeedLike = None,
    config: Optional[Configuration] = None,
) -> OscillatorFit:
    """Minimize the L1 spectral difference over (log k, log beta) with D = k beta.

    The model spectrum is truncated at omega_s/2 like the data; aliasing is ignored.
    `method` is "pso" (seeded swarm) or "grid" (exhaustive 100 x 100 search).
    """
    if method == "grid":
        return grid_search_oscillator(s_data)
    if method != "pso":
        raise ConfigurationError(f"unknown fit method {method!r}")
    cfg = config or Configuration()
    delta = _psd_objective(s_data)
    res = minimize_pso(
        delta,
        _log_bounds(s_data.omega_s),
        as_rng(rng_seed),
        swarm=cfg.swarm,
        iters=cfg.pso_iters,
        inertia=cfg.inertia,
        cognitive=cfg.cognitive,
        social=cfg.social,
        polish=cfg.polish,
    )
    params = OscillatorParams.from_k_beta(math.exp(res.x[0]), math.exp(res.x[1]))
    logger.info(f"oscillator fit (psd): k={params.k:.4f} beta={params.beta:.4f} delta={res.fun:.4e}")
    return OscillatorFit(params=params, delta=res.fun, method="psd", n_evals=res.n_evals, polished=res.polished)


def fit_oscillator(
    s_data: SpectralDensity,
    method: str = "pso",
    rng_seed: SeedLike = None,
    config: Optional[Configuration] = None,
) -> OscillatorParams:
    return fit_oscillator_report(s_data, method, rng_seed, config).params


def fit_oscillator_autocorr_report(
    r: np.ndarray,
    dt: float,
    max_lag: Optional[int] = None,
    rng_seed: SeedLike = None,
    config: Optional[Configuration] = None,
) -> OscillatorFit:
    """Minimize sum over lags 0..L of |r_hat - r_model| instead of the spectral difference."""
    cfg = config or Configuration()
    r = np.asarray(r, dtype=float)
    lag_count = r.size - 1 if max_lag is None else min(int(max_lag), r.size - 1)
    if lag_count < 1 or not np.all(np.isfinite(r)):
        raise FitError("autocorrelation needs at least one finite nonzero lag")
    target = r[: lag_count + 1]
    tau = np.arange(lag_count + 1) * dt

    def delta(x: np.ndarray) -> float:
        p = OscillatorParams.from_k_beta(math.exp(x[0]), math.exp(x[1]))
        return float(np.sum(np.abs(target - analytic_autocorrelation(p, tau))))

    res = minimize_pso(
        delta,
        _log_bounds(2 * math.pi / dt),
        as_rng(rng_seed),
        swarm=cfg.swarm,
        iters=cfg.pso_iters,
        inertia=cfg.inertia,
        cognitive=cfg.cognitive,
        social=cfg.social,
        polish=cfg.polish,
    )
    params = OscillatorParams.from_k_beta(math.exp(res.x[0]), math.exp(res.x[1]))
    logger.info(f"oscillator fit (acf): k={params.k:.4f} beta={params.beta:.4f} delta={res.fun:.4e}")
    return OscillatorFit(params=params, delta=res.fun, method="autocorr", n_evals=res.n_evals, polished=res.polished)


def fit_oscillator_autocorr(
    r: np.ndarray,
    dt: float,
    max_lag: Optional[int] = None,
    rng_seed: SeedLike = None,
    config: Optional[Configuration] = None,
) -> OscillatorParams:
    return fit_oscillator_autocorr_report(r, dt, max_lag, rng_seed, config).params
