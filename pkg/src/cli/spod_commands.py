"""SPOD commands: spod, project, reconstruct."""

import argparse
import logging
from pathlib import Path
from typing import List, Tuple

import numpy as np

from src.cli.common import CommandResult, add_config_flags, csv_metadata
from src.modeling.configuration import Configuration
from src.modeling.errors import ConfigurationError
from src.modeling.spod import (
    SnapshotEnsemble,
    compute_spod,
    eigenvalue_confidence,
    energy_fraction,
    project,
    reconstruct,
    selected_modes,
    top_modes,
)
from src.modeling.timeseries import load_csv, save_csv
from src.store.csv_store import load_weights, read_table, write_table
from src.store.snapshots import load_snapshots, load_spod_basis, save_snapshots, save_spod_basis

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("spod", help="SPOD basis of a snapshot ensemble")
    p.add_argument("--snapshots", required=True, help="Snapshot binary with a .json sidecar")
    p.add_argument("--weights", default=None, help="Quadrature weights CSV (default: ones)")
    p.add_argument("--nperseg", type=int, default=None)
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--fluctuations", action=argparse.BooleanOptionalAction, default=True, help="Remove the time mean")
    p.add_argument("--out", required=True, help="Basis directory")
    add_config_flags(p, "ci_level")
    p.set_defaults(handler=run_spod)

    p = subparsers.add_parser("project", help="Modal coordinates on selected SPOD modes")
    p.add_argument("--snapshots", required=True)
    p.add_argument("--weights", default=None)
    p.add_argument("--basis", required=True, help="Basis directory written by spod")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--top", type=int, help="Use the n most energetic modes")
    group.add_argument("--select", help="Explicit 'f:r,f:r,...' frequency/mode index pairs")
    p.add_argument("--fluctuations", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--modes-out", default=None, help="Write the real mode matrix (P x N) as CSV")
    p.add_argument("--out", required=True, help="Coordinates CSV")
    p.set_defaults(handler=run_project)

    p = subparsers.add_parser("reconstruct", help="Field from modal coordinates and a mode matrix")
    p.add_argument("--coords", required=True, help="Coordinates CSV written by project")
    p.add_argument("--modes", required=True, help="Mode matrix CSV written by project --modes-out")
    p.add_argument("--weights", default=None)
    p.add_argument("--out", required=True, help="Snapshot binary")
    p.set_defaults(handler=run_reconstruct)


def parse_selection(text: str) -> List[Tuple[int, int]]:
    pairs = []
    for item in text.split(","):
        if not item.strip():
            continue
        try:
            f, r = item.split(":")
            pairs.append((int(f), int(r)))
        except ValueError:
            raise ConfigurationError(f"bad selection entry {item!r}; expected 'f:r'")
    if not pairs:
        raise ConfigurationError("empty mode selection")
    return pairs


def _ensemble(args: argparse.Namespace) -> SnapshotEnsemble:
    ens = load_snapshots(args.snapshots, args.weights)
    return ens.fluctuations() if args.fluctuations else ens


def run_spod(args: argparse.Namespace, cfg: Configuration) -> CommandResult:
    ens = _ensemble(args)
    basis = compute_spod(ens, nperseg=args.nperseg, overlap=args.overlap)
    save_spod_basis(basis, args.out)
    lower, upper = eigenvalue_confidence(basis.n_blocks, cfg.ci_level)
    leading = top_modes(basis, 10)
    return CommandResult(
        outputs=[args.out],
        diagnostics={
            "n_points": ens.n_points,
            "n_blocks": basis.n_blocks,
            "nperseg": basis.nperseg,
            "n_frequencies": basis.n_frequencies,
            "energy_confidence_factors": [lower, upper],
            "leading_modes": [
                {"f": f, "r": r, "omega": float(basis.omega[f]), "energy": float(basis.energies[f][r])}
                for f, r in leading
            ],
            "leading_energy_fraction": energy_fraction(basis, leading),
        },
    )


def run_project(args: argparse.Namespace, cfg: Configuration) -> CommandResult:
    ens = _ensemble(args)
    basis = load_spod_basis(args.basis)
    selection = top_modes(basis, args.top) if args.top is not None else parse_selection(args.select)
    coords = project(ens, basis, selection)
    meta = csv_metadata(args, cfg, selection=[list(s) for s in selection])
    save_csv(coords, args.out, meta)
    outputs = [args.out]
    if args.modes_out:
        modes = selected_modes(basis, selection)
        write_table(args.modes_out, coords.names, modes.tolist(), meta)
        outputs.append(args.modes_out)
    return CommandResult(
        outputs=outputs,
        diagnostics={
            "selection": [list(s) for s in selection],
            "energy_fraction": energy_fraction(basis, selection),
        },
    )


def run_reconstruct(args: argparse.Namespace, cfg: Configuration) -> CommandResult:
    coords = load_csv(args.coords, has_header=True)
    _, names, modes = read_table(args.modes)
    if tuple(names) != tuple(coords.names):
        logger.warning(f"mode columns {list(names)} differ from coordinate channels {list(coords.names)}")
    weights = load_weights(args.weights) if args.weights else np.ones(modes.shape[0])
    field = reconstruct(coords, modes, weights)
    save_snapshots(field, Path(args.out))
    return CommandResult(
        outputs=[args.out],
        diagnostics={"n_points": field.n_points, "n_snapshots": field.n_snapshots},
    )
