"""Modeling commands: fit, simulate, rank-covariates and the Lorenz-96 demo."""

import argparse
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

from src.cli.common import (
    CommandResult,
    add_config_flags,
    csv_metadata,
    jsonable,
    parse_int_list,
    seed_echo,
    select_channel,
)
from src.modeling.baseline_rpm import REALIZATION, build_rpm, rpm_realization
from src.modeling.configuration import Configuration
from src.modeling.errors import ConfigurationError
from src.modeling.generators import Lorenz96Config, simulate_lorenz96
from src.modeling.oscillator import grid_search_oscillator
from src.modeling.seeding import STREAM_LORENZ, STREAM_OSCILLATOR, STREAM_PSO, STREAM_RPM, channel_rng
from src.modeling.spectral import default_nperseg, relative_l1, welch_psd
from src.modeling.surrogate import (
    SurrogateModel,
    fit_surrogate,
    generate_report,
    load_model,
    modeling_record,
    rank_covariates,
    save_model,
    transformed_channels,
)
from src.modeling.timeseries import TimeSeries, estimate_pdf, load_csv, moments, save_csv
from src.store.csv_store import write_table

logger = logging.getLogger(__name__)

FIT_FLAGS = (
    "degree",
    "ridge",
    "newton_tol",
    "newton_max_iter",
    "monotone_grid",
    "swarm",
    "pso_iters",
    "inertia",
    "cognitive",
    "social",
    "polish",
    "acf_max_lag",
    "max_concurrency",
)


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("fit", help="Fit a surrogate model to a TimeSeries CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--match", choices=["psd", "autocorr"], default="psd")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nperseg", type=int, default=None)
    p.add_argument("--ordering", default=None, help="Comma-separated 1-based channel order of the map")
    p.add_argument("--out", required=True, help="Model JSON")
    add_config_flags(p, *FIT_FLAGS)
    p.set_defaults(handler=run_fit)

    p = subparsers.add_parser("simulate", help="Generate a surrogate record from a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--T", type=float, required=True, help="Duration in seconds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    add_config_flags(p, "clamp_warn_fraction", "max_concurrency")
    p.set_defaults(handler=run_simulate)

    p = subparsers.add_parser("rank-covariates", help="Order covariates by |correlation| with a target")
    p.add_argument("--input", required=True)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--target", required=True, help="Target channel name or 1-based index")
    p.add_argument("--n", type=int, default=None, help="Covariates kept in the modeling record")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--match", choices=["psd", "autocorr"], default="psd")
    p.add_argument("--model-out", default=None, help="Also fit a surrogate to the modeling record")
    p.add_argument("--out", required=True, help="Modeling record CSV (covariates first, target last)")
    add_config_flags(p, *FIT_FLAGS)
    p.set_defaults(handler=run_rank_covariates)

    p = subparsers.add_parser("demo", help="Lorenz-96 end to end: truth vs surrogate vs random phase model")
    p.add_argument("--K", type=int, default=40)
    p.add_argument("--F", type=float, default=8.0)
    p.add_argument("--T", type=float, default=1000.0, help="Training record duration")
    p.add_argument("--sample-dt", type=float, default=0.1)
    p.add_argument("--surrogate-T", type=float, default=10000.0)
    p.add_argument("--rpm-m", type=int, default=500)
    p.add_argument("--grid", type=int, default=100, help="Grid-search oracle size per axis (0 skips)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="Output directory")
    add_config_flags(p, *FIT_FLAGS, "pdf_bins", "pdf_smooth_bins", "ci_level")
    p.set_defaults(handler=run_demo)


def _model_summary(model: SurrogateModel) -> Dict[str, Any]:
    diag = model.provenance.get("diagnostics", {})
    channels = diag.get("channels", [])
    return {
        "oscillators": [
            {
                "name": name,
                "k": o.k,
                "beta": o.beta,
                "D": o.D,
                "noise_amplitude": o.noise_amplitude,
                "regime": o.regime,
                "delta": channels[j]["delta"] if j < len(channels) else None,
            }
            for j, (name, o) in enumerate(zip(model.map.map_names, model.oscillators))
        ],
        "map_components": diag.get("map_components", []),
        "monotone_domain": diag.get("monotone_domain", []),
        "transformed_variance": [c.get("transformed_variance") for c in channels],
    }


def _fit_seeds(seed: int) -> Dict[str, Any]:
    return seed_echo(master=seed, pso_stream=STREAM_PSO)


def run_fit(args: argparse.Namespace, cfg: Configuration) -> CommandResult:
    ts = load_csv(args.input, has_header=True, dt=args.dt)
    ordering = parse_int_list(args.ordering)
    if ordering is not None:
        ordering = [o - 1 for o in ordering]
    model = fit_surrogate(ts, match=args.match, ordering=ordering, seed=args.seed, nperseg=args.nperseg, config=cfg)
    save_model(model, args.out)
    return CommandResult(
        outputs=[args.out],
        diagnostics=jsonable(_model_summary(model)),
        warnings=list(model.provenance["diagnostics"]["warnings"]),
        seeds=_fit_seeds(args.seed),
    )


def run_simulate(args: argparse.Namespace, cfg: Configuration) -> CommandResult:
    model = load_model(args.model)
    gen = generate_report(model, args.T, rng_seed=args.seed, config=cfg)
    meta = csv_metadata(args, cfg, clamp_fraction=gen.clamp_fraction, seeds=gen.seeds)
    save_csv(gen.series, args.out, meta)
    return CommandResult(
        outputs=[args.out],
        diagnostics={
            "n_samples": gen.series.n_samples,
            "clamp_fraction": gen.clamp_fraction,
            "moments": {name: moments(gen.series.channel(name)).as_dict() for name in gen.series.names},
        },
        warnings=list(gen.warnings),
        seeds=jsonable(gen.seeds),
    )


def run_rank_covariates(args: argparse.Namespace, cfg: Configuration) -> CommandResult:
    ts = load_csv(args.input, has_header=True, dt=args.dt)
    if ts.n_channels < 2:
        raise ConfigurationError(f"{args.input}: need a target and at least one candidate channel")
    _, target_name = select_channel(ts, args.target)
    target = ts.select([target_name])
    candidates = ts.select([n for n in ts.names if n != target_name])
    ranked = rank_covariates(target, candidates)
    warnings = [f"covariate {n} is constant; excluded" for n in candidates.names if n not in {c.name for c in ranked}]
    n = len(ranked) if args.n is None else args.n
    record = modeling_record(target, candidates, n)
    save_csv(record, args.out, csv_metadata(args, cfg, target=target_name))
    outputs = [args.out]
    diagnostics: Dict[str, Any] = {
        "target": target_name,
        "ranking": [{"rank": i + 1, "name": c.name, "correlation": c.correlation} for i, c in enumerate(ranked)],
        "modeling_order": list(record.names),
    }
    seeds: Dict[str, Any] = {}
    if args.model_out:
        model = fit_surrogate(record, match=args.match, seed=args.seed, config=cfg)
        save_model(model, args.model_out)
        outputs.append(args.model_out)
        diagnostics["model"] = jsonable(_model_summary(model))
        warnings.extend(model.provenance["diagnostics"]["warnings"])
        seeds = _fit_seeds(args.seed)
    return CommandResult(outputs=outputs, diagnostics=diagnostics, warnings=warnings, seeds=seeds)


# ---------------------- Lorenz-96 demo ----------------------

@dataclass(frozen=True)
class DemoResult:
    truth: TimeSeries
    model: SurrogateModel
    surrogate: TimeSeries
    rpm: TimeSeries
    report: Dict[str, Any]
    warnings: List[str]


def pipeline_lorenz_demo(
    lorenz: Optional[Lorenz96Config] = None,
    surrogate_T: float = 10000.0,
    rpm_m: int = 500,
    grid: int = 100,
    seed: int = 0,
    config: Optional[Configuration] = None,
) -> DemoResult:
    """Generate x1, fit a surrogate, simulate it and compare against a random phase model.

    Every random stream derives from `seed`. The report carries the fitted
    oscillator, its spectral difference (and the grid-search optimum when
    `grid` > 0) and the moments of truth, surrogate and random phase model.
    """
    cfg = config or Configuration()
    lorenz = lorenz or Lorenz96Config(seed=seed)
    truth = simulate_lorenz96(lorenz, [1])
    model = fit_surrogate(truth, match="psd", seed=seed, config=cfg)
    gen = generate_report(model, surrogate_T, rng_seed=seed, config=cfg)

    nperseg = default_nperseg(truth.n_samples)
    s_truth = welch_psd(truth.values[:, 0], truth.dt, nperseg)
    rpm_model = build_rpm(s_truth, rpm_m, channel_rng(seed, STREAM_RPM))
    rpm = rpm_realization(rpm_model, gen.series.n_samples, truth.dt)

    osc = model.oscillators[0]
    fit_delta = float(model.provenance["diagnostics"]["channels"][0]["delta"])
    fitted: Dict[str, Any] = {
        "k": osc.k,
        "beta": osc.beta,
        "D": osc.D,
        "noise_amplitude": osc.noise_amplitude,
        "delta": fit_delta,
    }
    if grid > 0:
        q = transformed_channels(model, truth)
        oracle = grid_search_oscillator(welch_psd(q.values[:, 0], q.dt, nperseg), n=grid)
        fitted["grid_delta"] = oracle.delta
        fitted["grid_k"] = oracle.params.k
        fitted["grid_beta"] = oracle.params.beta

    m_truth = moments(truth.values[:, 0])
    m_model = moments(gen.series.values[:, 0])
    m_rpm = moments(rpm.values[:, 0])
    model_gap = abs(m_model.skewness - m_truth.skewness)
    rpm_gap = abs(m_rpm.skewness - m_truth.skewness)

    s_model = welch_psd(gen.series.values[:, 0], truth.dt, nperseg)
    s_rpm = welch_psd(rpm.values[:, 0], truth.dt, nperseg)
    report = {
        "lorenz": lorenz.model_dump(),
        "fitted": fitted,
        "moments": {"truth": m_truth.as_dict(), "model": m_model.as_dict(), "rpm": m_rpm.as_dict()},
        "skewness_gap": {"model": model_gap, "rpm": rpm_gap},
        "rpm_misses_skewness": bool(rpm_gap > model_gap),
        "psd_relative_l1": {"model": relative_l1(s_model, s_truth), "rpm": relative_l1(s_rpm, s_truth)},
        "clamp_fraction": gen.clamp_fraction,
        "rpm_realization": REALIZATION,
        "seeds": {
            "master": seed,
            "lorenz_stream": STREAM_LORENZ,
            "pso_stream": STREAM_PSO,
            "oscillator_stream": STREAM_OSCILLATOR,
            "rpm_stream": STREAM_RPM,
        },
    }
    logger.info(
        f"demo: skewness truth={m_truth.skewness:.3f} model={m_model.skewness:.3f} rpm={m_rpm.skewness:.3f}"
    )
    warnings = list(model.provenance["diagnostics"]["warnings"]) + list(gen.warnings)
    return DemoResult(truth=truth, model=model, surrogate=gen.series, rpm=rpm, report=jsonable(report), warnings=warnings)


def _write_comparisons(result: DemoResult, out: Path, cfg: Configuration, meta: Dict[str, Any]) -> List[str]:
    truth = result.truth.values[:, 0]
    lo, hi = float(truth.min()), float(truth.max())
    pdfs = [
        estimate_pdf(x, cfg.pdf_bins, cfg.pdf_smooth_bins, cfg.ci_level, value_range=(lo, hi))
        for x in (truth, result.surrogate.values[:, 0], result.rpm.values[:, 0])
    ]
    pdf_path = out / "pdf_compare.csv"
    write_table(
        pdf_path,
        ("center", "truth", "truth_ci_lo", "truth_ci_hi", "model", "rpm"),
        zip(pdfs[0].centers, pdfs[0].density, pdfs[0].ci_lo, pdfs[0].ci_hi, pdfs[1].density, pdfs[2].density),
        meta,
    )

    nperseg = default_nperseg(result.truth.n_samples)
    spectra = [
        welch_psd(x, result.truth.dt, nperseg)
        for x in (truth, result.surrogate.values[:, 0], result.rpm.values[:, 0])
    ]
    psd_path = out / "psd_compare.csv"
    write_table(
        psd_path,
        ("omega", "truth", "model", "rpm"),
        zip(spectra[0].omega, spectra[0].values, spectra[1].values, spectra[2].values),
        {"omega_s": repr(spectra[0].omega_s), **meta},
    )
    return [str(pdf_path), str(psd_path)]


def run_demo(args: argparse.Namespace, cfg: Configuration) -> CommandResult:
    if args.T <= 0 or args.surrogate_T <= 0:
        raise ConfigurationError("durations must be positive")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lorenz = Lorenz96Config(K=args.K, F=args.F, T=args.T, sample_dt=args.sample_dt, seed=args.seed)
    result = pipeline_lorenz_demo(lorenz, args.surrogate_T, args.rpm_m, args.grid, args.seed, cfg)

    meta = csv_metadata(args, cfg)
    paths = {
        "truth": out / "truth.csv",
        "surrogate": out / "surrogate.csv",
        "rpm": out / "rpm.csv",
        "model": out / "model.json",
    }
    save_csv(result.truth, paths["truth"], meta)
    save_csv(result.surrogate, paths["surrogate"], meta)
    save_csv(result.rpm, paths["rpm"], {**meta, "realization": REALIZATION})
    save_model(result.model, paths["model"])
    outputs = [str(p) for p in paths.values()] + _write_comparisons(result, out, cfg, meta)
    return CommandResult(
        outputs=outputs,
        diagnostics=result.report,
        warnings=result.warnings,
        seeds=result.report["seeds"],
    )
