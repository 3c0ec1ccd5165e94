"""Data commands: gen-lorenz, gen-heavy-tail, rpm."""

import argparse
import logging

from src.cli.common import CommandResult, csv_metadata, parse_int_list, seed_echo
from src.modeling.baseline_rpm import REALIZATION, build_rpm, rpm_gaussianization_study, rpm_realization
from src.modeling.configuration import Configuration
from src.modeling.generators import HEAVY_TAIL_CUBIC, Lorenz96Config, simulate_lorenz96, synth_heavy_tail
from src.modeling.seeding import STREAM_LORENZ, STREAM_RPM, STREAM_SYNTH, channel_rng
from src.modeling.timeseries import moments, save_csv
from src.store.csv_store import load_psd, write_table

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("gen-lorenz", help="Integrate Lorenz-96 and record observed sites")
    p.add_argument("--K", type=int, default=40)
    p.add_argument("--F", type=float, default=8.0)
    p.add_argument("--dt", type=float, default=0.01, help="RK4 step")
    p.add_argument("--sample-dt", type=float, default=0.1)
    p.add_argument("--T", type=float, default=1000.0, help="Recorded duration")
    p.add_argument("--transient", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--observe", default="1", help="Comma-separated 1-based sites")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=run_gen_lorenz)

    p = subparsers.add_parser("gen-heavy-tail", help="Oscillator seen through y = z + 0.1 z^3")
    p.add_argument("--T", type=float, default=1000.0)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=run_gen_heavy_tail)

    p = subparsers.add_parser("rpm", help="Random phase model realization from a PSD CSV")
    p.add_argument("--psd", required=True, help="PSD CSV written by the psd command")
    p.add_argument("--m", type=int, default=500, help="Number of cells")
    p.add_argument("--T", type=float, default=1000.0, help="Realization duration")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--study", default=None, help="Comma-separated cell counts for the Gaussianization study")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=run_rpm)


def run_gen_lorenz(args: argparse.Namespace, cfg: Configuration) -> CommandResult:
    lorenz = Lorenz96Config(
        K=args.K,
        F=args.F,
        dt=args.dt,
        sample_dt=args.sample_dt,
        T=args.T,
        transient=args.transient,
        seed=args.seed,
    )
    ts = simulate_lorenz96(lorenz, parse_int_list(args.observe))
    save_csv(ts, args.out, csv_metadata(args, cfg, lorenz=lorenz.model_dump()))
    return CommandResult(
        outputs=[args.out],
        diagnostics={"n_samples": ts.n_samples, "channels": list(ts.names)},
        seeds=seed_echo(master=args.seed, stream=STREAM_LORENZ),
    )


def run_gen_heavy_tail(args: argparse.Namespace, cfg: Configuration) -> CommandResult:
    ts = synth_heavy_tail(args.T, args.dt, args.seed)
    save_csv(ts, args.out, csv_metadata(args, cfg, cubic=list(HEAVY_TAIL_CUBIC)))
    return CommandResult(
        outputs=[args.out],
        diagnostics={"n_samples": ts.n_samples, "moments": moments(ts).as_dict()},
        seeds=seed_echo(master=args.seed, stream=STREAM_SYNTH),
    )


def run_rpm(args: argparse.Namespace, cfg: Configuration) -> CommandResult:
    rho = load_psd(args.psd)
    model = build_rpm(rho, args.m, channel_rng(args.seed, STREAM_RPM))
    n_samples = max(int(round(args.T / rho.dt)), 1)
    g = rpm_realization(model, n_samples, rho.dt)
    meta = csv_metadata(args, cfg, realization=REALIZATION, frequency_scale=model.frequency_scale)
    save_csv(g, args.out, meta)
    outputs = [args.out]
    diagnostics = {
        "m": args.m,
        "realization": REALIZATION,
        "target_variance": model.variance,
        "moments": moments(g).as_dict(),
    }

    n_list = parse_int_list(args.study)
    if n_list:
        rows = rpm_gaussianization_study(rho, n_list, args.T, seed=args.seed)
        study_path = f"{args.out}.study.csv"
        write_table(
            study_path,
            ("n", "mean", "variance", "skewness", "excess_kurtosis", "target_variance"),
            (
                (r.n, r.moments.mean, r.moments.variance, r.moments.skewness, r.moments.excess_kurtosis, r.target_variance)
                for r in rows
            ),
            meta,
        )
        outputs.append(study_path)
        diagnostics["study"] = [{"n": r.n, **r.moments.as_dict()} for r in rows]
    return CommandResult(outputs=outputs, diagnostics=diagnostics, seeds=seed_echo(master=args.seed, stream=STREAM_RPM))
