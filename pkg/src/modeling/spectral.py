"""
Welch spectra, cross-spectral density matrices and the spectral difference.

Convention: values are two-sided densities reported on nonnegative angular
frequencies, Var = (1/2pi) * integral over [-ws/2, ws/2] of S, so that
(1/pi) * integral over [0, ws/2] of S is the variance. No one-sided factor 2
is applied, which lets the analytic oscillator spectrum be compared directly.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import fft as sp_fft
from scipy import signal as sp_signal
from scipy.integrate import trapezoid

from src.modeling.errors import ConfigurationError
from src.modeling.timeseries import ArrayLike, as_channel

logger = logging.getLogger(__name__)

MIN_NPERSEG = 8
WINDOWS = ("hann",)


@dataclass(frozen=True)
class SpectralDensity:
    """Spectral density on an ascending angular-frequency grid in [0, omega_s/2]."""

    omega: np.ndarray
    values: np.ndarray
    omega_s: float

    def __post_init__(self) -> None:
        omega = np.asarray(self.omega, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if omega.ndim != 1 or omega.shape != values.shape:
            raise ConfigurationError("omega and values must be 1-D of equal length")
        if omega.size > 1 and not np.all(np.diff(omega) > 0):
            raise ConfigurationError("omega grid must be strictly ascending")
        if np.any(values < 0):
            raise ConfigurationError("spectral density values must be nonnegative")
        if omega.size and omega[-1] > self.omega_s / 2 * (1 + 1e-9):
            raise ConfigurationError("omega grid extends past omega_s/2")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "omega_s", float(self.omega_s))

    @property
    def dt(self) -> float:
        return 2 * math.pi / self.omega_s

    def variance(self) -> float:
        """(1/pi) * trapezoidal integral of the density over its grid."""
        return float(trapezoid(self.values, self.omega) / math.pi)

    def interpolate(self, omega: np.ndarray) -> np.ndarray:
        return np.interp(omega, self.omega, self.values)


@dataclass(frozen=True)
class CrossSpectralMatrix:
    """P x P Hermitian cross-spectral density at one frequency."""

    omega: float
    matrix: np.ndarray
    weights: np.ndarray

    def weighted(self) -> np.ndarray:
        """W^(1/2) C W^(1/2); its eigenvalues are the SPOD energies."""
        s = np.sqrt(self.weights)
        return s[:, None] * self.matrix * s[None, :]


def default_nperseg(m: int) -> int:
    """Largest power of two <= M/8, at least 256 when the record permits."""
    p = 1 << max(int(math.floor(math.log2(max(m / 8, 1)))), 0)
    if p < 256:
        p = min(256, 1 << int(math.floor(math.log2(m))))
    return p


def _check_segments(m: int, nperseg: int, overlap: float, window: str) -> int:
    if window not in WINDOWS:
        raise ConfigurationError(f"unsupported window {window!r}; choose from {WINDOWS}")
    if nperseg < MIN_NPERSEG:
        raise ConfigurationError(f"nperseg must be >= {MIN_NPERSEG}, got {nperseg}")
    if nperseg > m:
        raise ConfigurationError(f"nperseg={nperseg} exceeds record length {m}")
    if not 0 <= overlap < 1:
        raise ConfigurationError(f"overlap must be in [0, 1), got {overlap}")
    return int(round(overlap * nperseg))


def welch_psd(
    x: ArrayLike,
    dt: float,
    nperseg: Optional[int] = None,
    overlap: float = 0.5,
    window: str = "hann",
) -> SpectralDensity:
    """Welch estimate of a single channel's spectral density.

    Each segment has its mean removed before windowing, so adding a constant
    to `x` leaves the estimate unchanged.
    """
    x = as_channel(x)
    nperseg = default_nperseg(x.size) if nperseg is None else int(nperseg)
    noverlap = _check_segments(x.size, nperseg, overlap, window)
    freqs, pxx = sp_signal.welch(
        x,
        fs=1.0 / dt,
        window=window,
        nperseg=nperseg,
        noverlap=noverlap,
        detrend="constant",
        scaling="density",
        return_onesided=True,
        average="mean",
    )
    # undo the one-sided doubling on interior bins
    two_sided = pxx / 2.0
    two_sided[0] = pxx[0]
    if nperseg % 2 == 0:
        two_sided[-1] = pxx[-1]
    return SpectralDensity(omega=2 * math.pi * freqs, values=two_sided, omega_s=2 * math.pi / dt)


def spectral_difference(s_model: SpectralDensity, s_data: SpectralDensity) -> float:
    """L1 distance of two spectra over the data grid, trapezoidal rule."""
    if not math.isclose(s_model.omega_s, s_data.omega_s, rel_tol=1e-9):
        raise ConfigurationError(
            f"sampling frequencies differ: {s_model.omega_s} vs {s_data.omega_s}"
        )
    if s_model.omega.shape == s_data.omega.shape and np.array_equal(s_model.omega, s_data.omega):
        model_vals = s_model.values
    else:
        model_vals = s_model.interpolate(s_data.omega)
    return float(trapezoid(np.abs(model_vals - s_data.values), s_data.omega))


def relative_l1(s_est: SpectralDensity, s_ref: SpectralDensity, band: Optional[Tuple[float, float]] = None) -> float:
    """Relative L1 error of `s_est` against `s_ref` on the reference grid."""
    omega = s_ref.omega
    est = s_est.interpolate(omega)
    mask = np.ones(omega.shape, dtype=bool) if band is None else (omega >= band[0]) & (omega <= band[1])
    den = trapezoid(s_ref.values[mask], omega[mask])
    return float(trapezoid(np.abs(est[mask] - s_ref.values[mask]), omega[mask]) / den)


def block_fourier_coefficients(
    data: np.ndarray,
    dt: float,
    nperseg: int,
    overlap: float = 0.5,
    window: str = "hann",
) -> Tuple[np.ndarray, np.ndarray]:
    """Blocked, windowed DFT coefficients of P channels.

    Returns (omega, Q_hat) with Q_hat of shape (F, P, B). Scaling makes
    mean over blocks of |Q_hat|^2 equal to `welch_psd` at every frequency.
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    p, m = data.shape
    noverlap = _check_segments(m, nperseg, overlap, window)
    step = nperseg - noverlap
    starts = range(0, m - nperseg + 1, step)
    win = sp_signal.get_window(window, nperseg)
    scale = math.sqrt(dt / float(np.sum(win**2)))
    blocks = []
    for s in starts:
        seg = data[:, s : s + nperseg]
        seg = seg - seg.mean(axis=1, keepdims=True)
        blocks.append(sp_fft.rfft(seg * win, axis=1) * scale)
    q_hat = np.stack(blocks, axis=-1)  # P x F x B
    omega = 2 * math.pi * sp_fft.rfftfreq(nperseg, d=dt)
    return omega, np.transpose(q_hat, (1, 0, 2))


def cross_spectral_density(
    snapshots: np.ndarray,
    dt: float,
    weights: Optional[np.ndarray] = None,
    nperseg: Optional[int] = None,
    overlap: float = 0.5,
    window: str = "hann",
) -> List[CrossSpectralMatrix]:
    """Per-frequency cross-spectral matrices of a P x M snapshot matrix."""
    snapshots = np.atleast_2d(np.asarray(snapshots, dtype=float))
    p, m = snapshots.shape
    weights = np.ones(p) if weights is None else np.asarray(weights, dtype=float)
    if weights.shape != (p,) or np.any(weights <= 0):
        raise ConfigurationError("weights must be P positive reals")
    nperseg = default_nperseg(m) if nperseg is None else int(nperseg)
    omega, q_hat = block_fourier_coefficients(snapshots, dt, nperseg, overlap, window)
    n_blocks = q_hat.shape[-1]
    out: List[CrossSpectralMatrix] = []
    for f, w in enumerate(omega):
        q = q_hat[f]
        c = q @ q.conj().T / n_blocks
        c = 0.5 * (c + c.conj().T)
        out.append(CrossSpectralMatrix(omega=float(w), matrix=c, weights=weights))
    logger.debug(f"CSD: P={p}, {len(out)} frequencies, {n_blocks} blocks")
    return out
