"""Snapshot matrices and SPOD bases on disk.

A snapshot file is a flat little-endian float64 P x M row-major binary with a
JSON sidecar `<file>.json` holding {P, M, dt}. A SPOD basis is a directory with
one little-endian complex128 P x R binary per frequency and `manifest.json`.
"""

import json
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import ValidationError

from src.modeling.errors import DataParseError, ModelFileError
from src.modeling.spod import SnapshotEnsemble, SpodBasis
from src.store.csv_store import load_weights, save_weights
from src.store.schemas import SnapshotHeader, SpodFrequencyRecord, SpodManifest

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
MANIFEST = "manifest.json"
WEIGHTS = "weights.csv"


def sidecar_path(path: PathLike) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".json")


def save_snapshots(ens: SnapshotEnsemble, path: PathLike, weights_path: Optional[PathLike] = None) -> None:
    path = Path(path)
    ens.data.astype("<f8").tofile(path)
    header = SnapshotHeader(P=ens.n_points, M=ens.n_snapshots, dt=ens.dt)
    sidecar_path(path).write_text(header.model_dump_json(indent=2))
    if weights_path is not None:
        save_weights(ens.weights, weights_path)


def load_snapshots(path: PathLike, weights_path: Optional[PathLike] = None) -> SnapshotEnsemble:
    """Read a snapshot binary; weights default to one per point."""
    path = Path(path)
    try:
        header = SnapshotHeader.model_validate_json(sidecar_path(path).read_text())
    except ValidationError as e:
        raise DataParseError(f"{sidecar_path(path)}: invalid sidecar: {e.errors()[0]['msg']}") from e
    data = np.fromfile(path, dtype="<f8")
    if data.size != header.P * header.M:
        raise DataParseError(f"{path}: {data.size} values, sidecar says {header.P} x {header.M}")
    weights = load_weights(weights_path) if weights_path is not None else np.ones(header.P)
    return SnapshotEnsemble(data.reshape(header.P, header.M), weights, header.dt)


def save_spod_basis(basis: SpodBasis, directory: PathLike) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    records = []
    for f, (omega, modes, energies) in enumerate(zip(basis.omega, basis.modes, basis.energies)):
        name = f"modes_{f:05d}.bin"
        np.ascontiguousarray(modes, dtype="<c16").tofile(directory / name)
        records.append(
            SpodFrequencyRecord(omega=float(omega), energies=energies.tolist(), n_modes=modes.shape[1], file=name)
        )
    save_weights(basis.weights, directory / WEIGHTS)
    manifest = SpodManifest(
        n_points=basis.weights.size,
        n_blocks=basis.n_blocks,
        nperseg=basis.nperseg,
        overlap=basis.overlap,
        dt=basis.dt,
        weights_file=WEIGHTS,
        frequencies=records,
    )
    (directory / MANIFEST).write_text(manifest.model_dump_json(indent=2))
    logger.info(f"saved SPOD basis with {len(records)} frequencies to {directory}")


def load_spod_basis(directory: PathLike) -> SpodBasis:
    directory = Path(directory)
    try:
        manifest = SpodManifest.model_validate(json.loads((directory / MANIFEST).read_text()))
    except json.JSONDecodeError as e:
        raise ModelFileError("manifest", f"not valid JSON: {e.msg}") from e
    except ValidationError as e:
        err = e.errors()[0]
        raise ModelFileError(".".join(str(p) for p in err["loc"]), err["msg"]) from e
    p = manifest.n_points
    modes = []
    for i, rec in enumerate(manifest.frequencies):
        raw = np.fromfile(directory / rec.file, dtype="<c16")
        if raw.size != p * rec.n_modes:
            raise ModelFileError(f"frequencies.{i}.file", f"{raw.size} values, expected {p} x {rec.n_modes}")
        modes.append(raw.reshape(p, rec.n_modes))
    weights = load_weights(directory / manifest.weights_file) if manifest.weights_file else np.ones(p)
    return SpodBasis(
        omega=np.array([r.omega for r in manifest.frequencies]),
        modes=tuple(modes),
        energies=tuple(np.array(r.energies) for r in manifest.frequencies),
        weights=weights,
        n_blocks=manifest.n_blocks,
        nperseg=manifest.nperseg,
        overlap=manifest.overlap,
        dt=manifest.dt,
    )
