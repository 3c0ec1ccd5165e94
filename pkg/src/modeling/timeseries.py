"""
Time-series container and the statistics computed on single channels.

- TimeSeries: uniformly sampled multichannel record, immutable
- CSV ingestion/writing with `# key=value` metadata lines
- standardization, sample moments, biased autocorrelation
- smoothed histogram PDFs with adjusted-Wald confidence bands
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from src.modeling.errors import (
    ConfigurationError,
    DataParseError,
    DegenerateChannelError,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence[float], "TimeSeries"]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled record: sample m is at time m*dt."""

    values: np.ndarray
    dt: float
    names: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ConfigurationError(f"values must be 2-D (samples x channels), got shape {values.shape}")
        m, n = values.shape
        if m < 2 or n < 1:
            raise ConfigurationError(f"need at least 2 samples and 1 channel, got {m}x{n}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigurationError(f"dt must be positive and finite, got {self.dt}")
        if not np.all(np.isfinite(values)):
            row, col = np.argwhere(~np.isfinite(values))[0]
            raise DataParseError(f"non-finite value in row {row + 1}, channel {col + 1}")
        names = tuple(self.names) if self.names else tuple(f"y{j + 1}" for j in range(n))
        if len(names) != n:
            raise ConfigurationError(f"{len(names)} names for {n} channels")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "names", names)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples * self.dt

    def channel(self, key: Union[int, str]) -> np.ndarray:
        """Return one channel by index or name."""
        j = self.names.index(key) if isinstance(key, str) else int(key)
        return self.values[:, j]

    def select(self, keys: Sequence[Union[int, str]]) -> "TimeSeries":
        """Return a record with the given channels, in the given order."""
        idx = [self.names.index(k) if isinstance(k, str) else int(k) for k in keys]
        return TimeSeries(self.values[:, idx], self.dt, tuple(self.names[j] for j in idx))

    def head(self, n: int) -> "TimeSeries":
        return TimeSeries(self.values[:n], self.dt, self.names)


@dataclass(frozen=True)
class Moments:
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float

    def as_dict(self) -> Dict[str, float]:
        return {
            "mean": self.mean,
            "variance": self.variance,
            "skewness": self.skewness,
            "excess_kurtosis": self.excess_kurtosis,
        }


@dataclass(frozen=True)
class SmoothedPdf:
    """Histogram density smoothed with a Gaussian kernel, plus its raw CI band."""

    centers: np.ndarray
    density: np.ndarray
    density_raw: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    bin_width: float
    counts: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate([self.centers - self.bin_width / 2, self.centers[-1:] + self.bin_width / 2])

    def log_density(self, floor: float = 0.0) -> np.ndarray:
        """Natural log of the smoothed density; bins at or below `floor` give -inf."""
        with np.errstate(divide="ignore"):
            return np.where(self.density > floor, np.log(np.maximum(self.density, 1e-300)), -np.inf)

    def rows(self) -> List[Tuple[float, float, float, float]]:
        return list(zip(self.centers.tolist(), self.density.tolist(), self.ci_lo.tolist(), self.ci_hi.tolist()))


def as_channel(x: ArrayLike) -> np.ndarray:
    """Coerce a 1-channel record (array or single-channel TimeSeries) to a 1-D array."""
    if isinstance(x, TimeSeries):
        if x.n_channels != 1:
            raise ConfigurationError(f"expected a single channel, got {x.n_channels}")
        return np.asarray(x.values[:, 0])
    a = np.asarray(x, dtype=float)
    if a.ndim == 2 and a.shape[1] == 1:
        a = a[:, 0]
    if a.ndim != 1:
        raise ConfigurationError(f"expected a 1-D series, got shape {a.shape}")
    return a


# ---------------------- CSV ingestion ----------------------

def _parse_metadata(line: str) -> Tuple[str, str]:
    body = line.lstrip("#").strip()
    if "=" not in body:
        return "", body
    key, value = body.split("=", 1)
    return key.strip(), value.strip()


def read_csv_metadata(path: Union[str, Path]) -> Dict[str, str]:
    """Return the `# key=value` lines at the top of a CSV file."""
    meta: Dict[str, str] = {}
    with open(path, newline="") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, value = _parse_metadata(line)
            if key:
                meta[key] = value
    return meta


def load_csv(path: Union[str, Path], has_header: bool = True, dt: Optional[float] = None) -> TimeSeries:
    """Load a TimeSeries from CSV.

    Leading lines starting with `#` carry `key=value` metadata; `dt` comes
    from `# dt=<seconds>` unless passed explicitly (an explicit value wins).
    """
    path = Path(path)
    meta: Dict[str, str] = {}
    names: Optional[List[str]] = None
    rows: List[List[float]] = []
    width: Optional[int] = None
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if line.lstrip().startswith("#"):
            # metadata only counts before the data
            if not rows and names is None:
                key, value = _parse_metadata(line.strip())
                if key:
                    meta[key] = value
            continue
        raw = next(csv.reader([line]))
        if has_header and names is None:
            names = [c.strip() for c in raw]
            width = len(names)
            continue
        if width is None:
            width = len(raw)
        if len(raw) != width:
            raise DataParseError(f"expected {width} columns, found {len(raw)}", line=lineno)
        row: List[float] = []
        for col, cell in enumerate(raw, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise DataParseError(f"cannot parse {cell.strip()!r} as a real number", line=lineno, column=col)
            if not math.isfinite(v):
                raise DataParseError(
                    f"non-finite value {cell.strip()!r} in row {len(rows) + 1}", line=lineno, column=col
                )
            row.append(v)
        rows.append(row)

    if dt is None:
        if "dt" not in meta:
            raise ConfigurationError(f"{path}: sampling interval missing; add '# dt=<seconds>' or pass dt")
        try:
            dt = float(meta["dt"])
        except ValueError:
            raise ConfigurationError(f"{path}: cannot parse dt={meta['dt']!r}")
    if not rows:
        raise DataParseError(f"{path}: no numeric rows")
    logger.debug(f"Loaded {path}: {len(rows)} rows x {width} channels, dt={dt}")
    return TimeSeries(np.array(rows, dtype=float), float(dt), tuple(names) if names else ())


def save_csv(ts: TimeSeries, path: Union[str, Path], metadata: Optional[Dict[str, Any]] = None) -> None:
    """Write a TimeSeries as CSV with `# dt=` and optional metadata lines.

    Floats are written with `repr`, which round-trips exactly.
    """
    with open(path, "w", newline="") as fh:
        fh.write(f"# dt={ts.dt!r}\n")
        for key, value in (metadata or {}).items():
            text = value if isinstance(value, str) else json.dumps(value, sort_keys=True, default=_json_default)
            fh.write(f"# {key}={text}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ts.names)
        for row in ts.values.tolist():
            writer.writerow([repr(v) for v in row])


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return str(obj)


# ---------------------- Standardization and moments ----------------------

def standardize(ts: TimeSeries) -> Tuple[TimeSeries, np.ndarray, np.ndarray]:
    """Remove the sample mean and divide by the sample (n-1) std per channel."""
    means = ts.values.mean(axis=0)
    stds = ts.values.std(axis=0, ddof=1)
    for j, s in enumerate(stds):
        if not s > 0:
            raise DegenerateChannelError(ts.names[j])
    out = (ts.values - means) / stds
    return TimeSeries(out, ts.dt, ts.names), means, stds


def unstandardize(ts: TimeSeries, means: np.ndarray, stds: np.ndarray) -> TimeSeries:
    """Inverse of `standardize`."""
    return TimeSeries(ts.values * np.asarray(stds) + np.asarray(means), ts.dt, ts.names)


def moments(x: ArrayLike) -> Moments:
    """Mean, (n-1) variance, and biased central-moment skewness/excess kurtosis."""
    x = as_channel(x)
    if x.size < 4:
        raise ConfigurationError(f"moments need at least 4 samples, got {x.size}")
    centered = x - x.mean()
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        raise DegenerateChannelError("x")
    return Moments(
        mean=float(x.mean()),
        variance=float(x.var(ddof=1)),
        skewness=float(stats.skew(x, bias=True)),
        excess_kurtosis=float(stats.kurtosis(x, fisher=True, bias=True)),
    )


def autocorrelation(x: ArrayLike, max_lag: int) -> np.ndarray:
    """Biased autocorrelation r(0..max_lag), normalized so r(0) = 1."""
    x = as_channel(x)
    m = x.size
    if not 0 <= max_lag < m:
        raise ConfigurationError(f"max_lag must be in [0, {m - 1}], got {max_lag}")
    centered = x - x.mean()
    nfft = 1 << int(math.ceil(math.log2(2 * m)))
    spec = np.fft.rfft(centered, nfft)
    acov = np.fft.irfft(spec * np.conj(spec), nfft)[: max_lag + 1] / m
    if not acov[0] > 0:
        raise DegenerateChannelError("x")
    r = acov / acov[0]
    r[0] = 1.0
    return r


# ---------------------- PDF compilation ----------------------

def gaussian_smooth_bins(raw: np.ndarray, sigma_bins: float) -> np.ndarray:
    """Smooth a binned density with a Gaussian kernel truncated at 4 sigma.

    Each bin spreads its mass over the neighbours that exist, with the partial
    kernel renormalized, so nothing wraps around and total mass is conserved.
    """
    if sigma_bins <= 0:
        return raw.astype(float).copy()
    half = int(math.ceil(4 * sigma_bins))
    offsets = np.arange(-half, half + 1)
    kernel = np.exp(-0.5 * (offsets / sigma_bins) ** 2)
    n = raw.size
    out = np.zeros(n)
    for j in np.nonzero(raw)[0]:
        lo, hi = max(0, j - half), min(n, j + half + 1)
        k = kernel[lo - j + half : hi - j + half]
        out[lo:hi] += raw[j] * k / k.sum()
    return out


def adjusted_wald(counts: np.ndarray, total: int, ci_level: float = 0.95) -> Tuple[np.ndarray, np.ndarray]:
    """Adjusted-Wald proportion interval per bin: p~ = (c+2)/(M+4)."""
    z = stats.norm.ppf(0.5 + ci_level / 2)
    p = (counts + 2.0) / (total + 4.0)
    half = z * np.sqrt(p * (1.0 - p) / (total + 4.0))
    return np.clip(p - half, 0.0, 1.0), np.clip(p + half, 0.0, 1.0)


def estimate_pdf(
    x: ArrayLike,
    bins: int = 100,
    smooth_sigma_bins: float = 2.0,
    ci_level: float = 0.95,
    value_range: Optional[Tuple[float, float]] = None,
) -> SmoothedPdf:
    """Histogram density over [min, max] (or `value_range`), Gaussian-smoothed, with CI band.

    Densities are normalized by the total sample count, so with an explicit
    range that cuts off samples the raw density integrates to less than one.
    """
    x = as_channel(x)
    if bins < 2:
        raise ConfigurationError(f"bins must be >= 2, got {bins}")
    if not 0 < ci_level < 1:
        raise ConfigurationError(f"ci_level must be in (0, 1), got {ci_level}")
    m = x.size
    if m < bins:
        raise ConfigurationError(f"need at least {bins} samples for {bins} bins, got {m}")
    lo, hi = value_range if value_range is not None else (float(x.min()), float(x.max()))
    if not hi > lo:
        raise DegenerateChannelError("x", "histogram range is empty (constant data?)")
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    width = (hi - lo) / bins
    raw = counts / (m * width)
    p_lo, p_hi = adjusted_wald(counts, m, ci_level)
    ci_lo = np.minimum(p_lo / width, raw)
    ci_hi = np.maximum(p_hi / width, raw)
    return SmoothedPdf(
        centers=0.5 * (edges[:-1] + edges[1:]),
        density=gaussian_smooth_bins(raw, smooth_sigma_bins),
        density_raw=raw,
        ci_lo=ci_lo,
        ci_hi=ci_hi,
        bin_width=width,
        counts=counts,
    )


def estimate_joint_pdf(
    x: ArrayLike, y: ArrayLike, bins: int = 50
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pairwise marginal: normalized 2-D histogram (x_edges, y_edges, density)."""
    x, y = as_channel(x), as_channel(y)
    if x.size != y.size:
        raise ConfigurationError("joint PDF needs equal-length series")
    density, xe, ye = np.histogram2d(x, y, bins=bins, density=True)
    return xe, ye, density


def band_coverage(model: SmoothedPdf, truth: SmoothedPdf, mask: Optional[np.ndarray] = None) -> float:
    """Fraction of bins where the model's smoothed density lies in the truth CI band."""
    if model.centers.shape != truth.centers.shape or not np.allclose(model.centers, truth.centers):
        raise ConfigurationError("PDFs must share a bin grid (use value_range)")
    inside = (model.density >= truth.ci_lo) & (model.density <= truth.ci_hi)
    if mask is not None:
        inside = inside[mask]
    return float(np.mean(inside)) if inside.size else float("nan")
