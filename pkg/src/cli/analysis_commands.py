"""Analysis commands: psd, pdf, acf, separate."""

import argparse

import numpy as np

from src.cli.common import CommandResult, add_config_flags, csv_metadata, parse_float_pair, select_channel
from src.modeling.configuration import Configuration
from src.modeling.spectral import welch_psd
from src.modeling.spod import separate_mixed_spectra
from src.modeling.timeseries import TimeSeries, autocorrelation, estimate_pdf, load_csv, moments, save_csv
from src.store.csv_store import save_acf, save_pdf, save_psd


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="TimeSeries CSV")
    p.add_argument("--channel", default=None, help="Channel name or 1-based index (default: first)")
    p.add_argument("--dt", type=float, default=None, help="Sampling interval if the CSV has no '# dt=' line")
    p.add_argument("--out", required=True)


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("psd", help="Welch spectral density of one channel")
    _add_input(p)
    p.add_argument("--nperseg", type=int, default=None)
    p.add_argument("--overlap", type=float, default=0.5)
    p.set_defaults(handler=run_psd)

    p = subparsers.add_parser("pdf", help="Smoothed histogram PDF with confidence band")
    _add_input(p)
    p.add_argument("--range", default=None, help="Common histogram range 'lo,hi'")
    add_config_flags(p, "pdf_bins", "pdf_smooth_bins", "ci_level")
    p.set_defaults(handler=run_pdf)

    p = subparsers.add_parser("acf", help="Normalized autocorrelation of one channel")
    _add_input(p)
    add_config_flags(p, "acf_max_lag")
    p.set_defaults(handler=run_acf)

    p = subparsers.add_parser("separate", help="Split a record into line and broadband parts")
    _add_input(p)
    p.add_argument("--threshold", type=float, default=0.01, help="Energy fraction marking a line")
    p.set_defaults(handler=run_separate)


def _load(args: argparse.Namespace) -> TimeSeries:
    return load_csv(args.input, has_header=True, dt=args.dt)


def run_psd(args: argparse.Namespace, cfg: Configuration) -> CommandResult:
    ts = _load(args)
    x, name = select_channel(ts, args.channel)
    s = welch_psd(x, ts.dt, nperseg=args.nperseg, overlap=args.overlap)
    save_psd(s, args.out, csv_metadata(args, cfg, channel=name))
    return CommandResult(
        outputs=[args.out],
        diagnostics={"channel": name, "n_frequencies": int(s.omega.size), "variance": s.variance(), "sample_variance": float(np.var(x))},
    )


def run_pdf(args: argparse.Namespace, cfg: Configuration) -> CommandResult:
    ts = _load(args)
    x, name = select_channel(ts, args.channel)
    pdf = estimate_pdf(
        x,
        bins=cfg.pdf_bins,
        smooth_sigma_bins=cfg.pdf_smooth_bins,
        ci_level=cfg.ci_level,
        value_range=parse_float_pair(args.range),
    )
    save_pdf(pdf, args.out, csv_metadata(args, cfg, channel=name, bin_width=pdf.bin_width))
    return CommandResult(outputs=[args.out], diagnostics={"channel": name, "moments": moments(x).as_dict()})


def run_acf(args: argparse.Namespace, cfg: Configuration) -> CommandResult:
    ts = _load(args)
    x, name = select_channel(ts, args.channel)
    r = autocorrelation(x, min(cfg.acf_max_lag, x.size - 1))
    save_acf(r, ts.dt, args.out, csv_metadata(args, cfg, channel=name))
    return CommandResult(outputs=[args.out], diagnostics={"channel": name, "max_lag": int(r.size - 1)})


def run_separate(args: argparse.Namespace, cfg: Configuration) -> CommandResult:
    ts = _load(args)
    x, name = select_channel(ts, args.channel)
    sep = separate_mixed_spectra(x, threshold=args.threshold, dt=ts.dt)
    out = TimeSeries(np.column_stack([sep.periodic, sep.chaotic]), ts.dt, ("periodic", "chaotic"))
    meta = csv_metadata(args, cfg, channel=name, mean=sep.mean, line_omegas=sep.line_omegas.tolist())
    save_csv(out, args.out, meta)
    return CommandResult(
        outputs=[args.out],
        diagnostics={
            "channel": name,
            "mean": sep.mean,
            "line_omegas": sep.line_omegas.tolist(),
            "periodic_energy": sep.periodic_energy,
            "chaotic_energy": sep.chaotic_energy,
        },
    )
