"""CSV tables for spectra, PDFs, autocorrelations and weights.

Every table starts with `# key=value` lines (values JSON-encoded unless they
are strings), then a header row, then rows of `repr` floats.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.modeling.errors import DataParseError
from src.modeling.spectral import SpectralDensity
from src.modeling.timeseries import SmoothedPdf, load_csv, read_csv_metadata

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _meta_text(value: Any) -> str:
    return value if isinstance(value, str) else json.dumps(value, sort_keys=True, default=str)


def write_table(
    path: PathLike,
    header: Sequence[str],
    rows: Iterable[Sequence[float]],
    metadata: Optional[Dict[str, Any]] = None,
) -> None:
    with open(path, "w", newline="") as fh:
        for key, value in (metadata or {}).items():
            fh.write(f"# {key}={_meta_text(value)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def read_table(path: PathLike) -> Tuple[Dict[str, str], Tuple[str, ...], np.ndarray]:
    """(metadata, header, values) of a table written by `write_table`."""
    ts = load_csv(path, has_header=True, dt=1.0)
    return read_csv_metadata(path), ts.names, np.array(ts.values)


def _column(header: Tuple[str, ...], values: np.ndarray, name: str, path: PathLike) -> np.ndarray:
    if name not in header:
        raise DataParseError(f"{path}: missing column {name!r} (found {list(header)})")
    return values[:, header.index(name)]


def save_psd(s: SpectralDensity, path: PathLike, metadata: Optional[Dict[str, Any]] = None) -> None:
    meta = {"omega_s": repr(s.omega_s), **(metadata or {})}
    write_table(path, ("omega", "value"), zip(s.omega.tolist(), s.values.tolist()), meta)


def load_psd(path: PathLike) -> SpectralDensity:
    meta, header, values = read_table(path)
    omega = _column(header, values, "omega", path)
    vals = _column(header, values, "value", path)
    omega_s = float(meta["omega_s"]) if "omega_s" in meta else 2 * float(omega[-1])
    return SpectralDensity(omega=omega, values=vals, omega_s=omega_s)


def save_pdf(pdf: SmoothedPdf, path: PathLike, metadata: Optional[Dict[str, Any]] = None) -> None:
    write_table(path, ("center", "density", "ci_lo", "ci_hi"), pdf.rows(), metadata)


def save_acf(r: np.ndarray, dt: float, path: PathLike, metadata: Optional[Dict[str, Any]] = None) -> None:
    lags = np.arange(r.size) * dt
    write_table(path, ("lag", "r"), zip(lags.tolist(), np.asarray(r).tolist()), metadata)


def save_weights(weights: np.ndarray, path: PathLike) -> None:
    write_table(path, ("weight",), ((w,) for w in np.asarray(weights).tolist()))


def load_weights(path: PathLike) -> np.ndarray:
    """Weights CSV: a `weight` column, or a single unnamed column."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DataParseError(f"{path}: no weights")
    start = 0
    try:
        float(lines[0].split(",")[0])
    except ValueError:
        start = 1
    out: List[float] = []
    for lineno, line in enumerate(lines[start:], start=start + 1):
        try:
            out.append(float(line.split(",")[0]))
        except ValueError:
            raise DataParseError(f"cannot parse weight {line!r}", line=lineno)
    return np.array(out)
