"""
Spectral proper orthogonal decomposition of snapshot ensembles.

Snapshots are split into overlapping windowed blocks and Fourier transformed
in time. At every frequency the B x B matrix Q^H W Q / B is diagonalized
(method of snapshots); modes are Q Theta Lambda^(-1/2) / sqrt(B), which are
orthonormal in the W-weighted inner product. Also here: modal projection,
Gramian reconstruction from non-orthogonal modes, and separation of a record
into line (periodic) and broadband (chaotic) parts.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sp_fft
from scipy import linalg, stats

from src.modeling.errors import ConditioningError, ConfigurationError
from src.modeling.spectral import block_fourier_coefficients, default_nperseg
from src.modeling.timeseries import ArrayLike, TimeSeries, as_channel

logger = logging.getLogger(__name__)

MODE_RTOL = 1e-12
MAX_GRAMIAN_CONDITION = 1e8


@dataclass(frozen=True)
class SnapshotEnsemble:
    """P spatial points x M time samples with positive quadrature weights."""

    data: np.ndarray
    weights: np.ndarray
    dt: float

    def __post_init__(self) -> None:
        data = np.atleast_2d(np.asarray(self.data, dtype=float))
        weights = np.asarray(self.weights, dtype=float).ravel()
        if not np.all(np.isfinite(data)):
            raise ConfigurationError("snapshot data must be finite")
        if weights.shape != (data.shape[0],):
            raise ConfigurationError(f"{weights.size} weights for {data.shape[0]} points")
        if np.any(~np.isfinite(weights)) or np.any(weights <= 0):
            raise ConfigurationError("weights must be strictly positive")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        data.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_points(self) -> int:
        return self.data.shape[0]

    @property
    def n_snapshots(self) -> int:
        return self.data.shape[1]

    def fluctuations(self) -> "SnapshotEnsemble":
        """Ensemble with the long-time mean of every point removed."""
        return SnapshotEnsemble(self.data - self.data.mean(axis=1, keepdims=True), self.weights, self.dt)


@dataclass(frozen=True)
class SpodBasis:
    """Per-frequency modes (P x R complex) and energies (descending, min(P, B) entries)."""

    omega: np.ndarray
    modes: Tuple[np.ndarray, ...]
    energies: Tuple[np.ndarray, ...]
    weights: np.ndarray
    n_blocks: int
    nperseg: int
    overlap: float
    dt: float

    def __post_init__(self) -> None:
        if not (len(self.omega) == len(self.modes) == len(self.energies)):
            raise ConfigurationError("one mode set and energy vector per frequency required")
        for f, lam in enumerate(self.energies):
            if lam.size and np.any(np.diff(lam) > 1e-12 * max(lam[0], 1e-300)):
                raise ConfigurationError(f"energies at frequency index {f} are not descending")

    @property
    def n_frequencies(self) -> int:
        return len(self.omega)

    def mode(self, f: int, r: int) -> np.ndarray:
        if not 0 <= f < self.n_frequencies:
            raise ConfigurationError(f"frequency index {f} out of range [0, {self.n_frequencies})")
        if not 0 <= r < self.modes[f].shape[1]:
            raise ConfigurationError(f"mode index {r} out of range at frequency index {f} ({self.modes[f].shape[1]} retained)")
        return self.modes[f][:, r]


def _normalize_phase(modes: np.ndarray) -> np.ndarray:
    # largest-magnitude component real and positive
    idx = np.argmax(np.abs(modes), axis=0)
    pivot = modes[idx, np.arange(modes.shape[1])]
    return modes * (np.abs(pivot) / pivot)[None, :]


def compute_spod(
    ens: SnapshotEnsemble,
    nperseg: Optional[int] = None,
    overlap: float = 0.5,
    window: str = "hann",
) -> SpodBasis:
    """Blocked-DFT SPOD by the method of snapshots."""
    nperseg = default_nperseg(ens.n_snapshots) if nperseg is None else int(nperseg)
    omega, q_hat = block_fourier_coefficients(ens.data, ens.dt, nperseg, overlap, window)
    n_blocks = q_hat.shape[-1]
    if n_blocks < 2:
        raise ConfigurationError(f"SPOD needs at least 2 blocks, got {n_blocks}")
    w = ens.weights
    n_energy = min(ens.n_points, n_blocks)
    modes: List[np.ndarray] = []
    energies: List[np.ndarray] = []
    for f in range(omega.size):
        q = q_hat[f]
        m = q.conj().T @ (w[:, None] * q) / n_blocks
        m = 0.5 * (m + m.conj().T)
        lam, theta = linalg.eigh(m)
        order = np.argsort(lam)[::-1]
        lam, theta = lam[order], theta[:, order]
        lam_max = max(float(lam[0]), 0.0)
        keep = lam > MODE_RTOL * lam_max if lam_max > 0 else np.zeros(lam.size, dtype=bool)
        psi = q @ theta[:, keep] / np.sqrt(n_blocks * lam[keep])[None, :]
        modes.append(_normalize_phase(psi) if psi.shape[1] else psi)
        energies.append(np.clip(lam[:n_energy], -MODE_RTOL * lam_max, None))
    logger.info(f"SPOD: P={ens.n_points}, B={n_blocks}, nperseg={nperseg}, {omega.size} frequencies")
    return SpodBasis(
        omega=omega,
        modes=tuple(modes),
        energies=tuple(energies),
        weights=ens.weights,
        n_blocks=n_blocks,
        nperseg=nperseg,
        overlap=overlap,
        dt=ens.dt,
    )


def top_modes(basis: SpodBasis, n: int) -> List[Tuple[int, int]]:
    """The n most energetic (frequency index, mode index) pairs over all frequencies."""
    pairs = [
        (float(basis.energies[f][r]), f, r)
        for f in range(basis.n_frequencies)
        for r in range(basis.modes[f].shape[1])
    ]
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
    return [(f, r) for _, f, r in pairs[:n]]


def energy_fraction(basis: SpodBasis, selection: Sequence[Tuple[int, int]]) -> float:
    total = float(sum(np.sum(np.clip(lam, 0, None)) for lam in basis.energies))
    picked = float(sum(basis.energies[f][r] for f, r in selection))
    return picked / total if total > 0 else 0.0


def eigenvalue_confidence(n_blocks: int, level: float = 0.95) -> Tuple[float, float]:
    """Multiplicative confidence factors (lower, upper) for an SPOD energy estimated from B blocks."""
    if n_blocks < 1 or not 0 < level < 1:
        raise ConfigurationError("need B >= 1 and 0 < level < 1")
    dof = 2 * n_blocks
    lower = dof / stats.chi2.ppf(0.5 + level / 2, dof)
    upper = dof / stats.chi2.ppf(0.5 - level / 2, dof)
    return float(lower), float(upper)


# ---------------------- Projection and reconstruction ----------------------

def selected_modes(basis: SpodBasis, selection: Sequence[Tuple[int, int]]) -> np.ndarray:
    """Real parts of the selected modes as a P x N matrix."""
    return np.column_stack([basis.mode(int(f), int(r)).real for f, r in selection])


def project_modes(ens: SnapshotEnsemble, modes: np.ndarray, names: Optional[Sequence[str]] = None) -> TimeSeries:
    """y_j(t) = sum_x w(x) psi_j(x) u(x, t) for real P x N modes."""
    modes = np.atleast_2d(np.asarray(modes, dtype=float))
    if modes.shape[0] != ens.n_points:
        raise ConfigurationError(f"modes have {modes.shape[0]} points, ensemble {ens.n_points}")
    coords = (modes * ens.weights[:, None]).T @ ens.data
    names = tuple(names) if names else tuple(f"y{j + 1}" for j in range(modes.shape[1]))
    return TimeSeries(coords.T, ens.dt, names)


def project(ens: SnapshotEnsemble, basis: SpodBasis, selection: Sequence[Tuple[int, int]]) -> TimeSeries:
    """Modal coordinates on the real parts of the selected modes, in selection order."""
    names = [f"f{int(f)}_m{int(r)}" for f, r in selection]
    return project_modes(ens, selected_modes(basis, selection), names)


def gramian_inverse(modes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """H = G^-1 with G_jk = psi_j^T W psi_k."""
    modes = np.atleast_2d(np.asarray(modes, dtype=float))
    g = modes.T @ (np.asarray(weights)[:, None] * modes)
    cond = float(np.linalg.cond(g))
    if not cond < MAX_GRAMIAN_CONDITION:
        raise ConditioningError("mode Gramian is ill-conditioned", cond)
    if np.allclose(g, np.eye(g.shape[0]), rtol=0.0, atol=1e-14):
        return np.eye(g.shape[0])
    return linalg.inv(g)


def reconstruct(coords: TimeSeries, modes: np.ndarray, weights: np.ndarray) -> SnapshotEnsemble:
    """u(x, t) = sum_jk H_jk y_k(t) psi_j(x)."""
    modes = np.atleast_2d(np.asarray(modes, dtype=float))
    if modes.shape[1] != coords.n_channels:
        raise ConfigurationError(f"{modes.shape[1]} modes for {coords.n_channels} coordinates")
    h = gramian_inverse(modes, weights)
    field = modes @ h @ coords.values.T
    return SnapshotEnsemble(field, weights, coords.dt)


# ---------------------- Mixed spectra ----------------------

@dataclass(frozen=True)
class SpectralSeparation:
    mean: float
    periodic: np.ndarray
    chaotic: np.ndarray
    line_omegas: np.ndarray

    @property
    def periodic_energy(self) -> float:
        return float(np.sum(self.periodic**2))

    @property
    def chaotic_energy(self) -> float:
        return float(np.sum(self.chaotic**2))


def separate_mixed_spectra(x: ArrayLike, threshold: float = 0.01, dt: float = 1.0) -> SpectralSeparation:
    """Split a record into strong Fourier lines and the broadband remainder.

    Conjugate bin pairs holding more than `threshold` of the fluctuation
    energy go to `periodic`, every other bin to `chaotic`.
    x = mean + periodic + chaotic.
    """
    x = as_channel(x)
    m = x.size
    if m < 16:
        raise ConfigurationError(f"need at least 16 samples, got {m}")
    if not 0 < threshold < 1:
        raise ConfigurationError(f"threshold must be in (0, 1), got {threshold}")
    mean = float(x.mean())
    spec = sp_fft.rfft(x - mean)
    energy = np.abs(spec) ** 2
    paired = np.ones(energy.size, dtype=bool)
    paired[0] = False
    if m % 2 == 0:
        paired[-1] = False
    energy[paired] *= 2
    total = float(energy.sum())
    mask = energy > threshold * total if total > 0 else np.zeros(energy.size, dtype=bool)
    periodic = sp_fft.irfft(np.where(mask, spec, 0), n=m)
    chaotic = sp_fft.irfft(np.where(mask, 0, spec), n=m)
    omegas = 2 * math.pi * sp_fft.rfftfreq(m, d=dt)[mask]
    logger.info(f"mixed spectra: {int(mask.sum())} line bins above {threshold:.2%} of fluctuation energy")
    return SpectralSeparation(mean=mean, periodic=periodic, chaotic=chaotic, line_omegas=omegas)
