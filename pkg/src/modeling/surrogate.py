"""
Generative surrogate: oscillators in transformed space observed through the inverse map.

Fitting learns a triangular map that Gaussianizes the record, then fits one
unit-variance stochastic oscillator to each transformed channel. Generation
simulates the oscillators independently and pulls the result back through the
inverse map.
"""

import asyncio
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from src.modeling.configuration import Configuration
from src.modeling.errors import ConfigurationError, DegenerateChannelError, ModelFileError
from src.modeling.fit_graph import MATCH_MODES, fit_graph
from src.modeling.oscillator import OscillatorParams, simulate
from src.modeling.seeding import SEED_RULE, STREAM_OSCILLATOR, STREAM_PSO, channel_rng, derived_seeds
from src.modeling.timeseries import TimeSeries, as_channel
from src.modeling.transport import (
    MonotoneTriangularMap,
    inverse_samples,
    map_from_dict,
    map_to_dict,
    transport_samples,
)
from src.store.schemas import ModelFile

logger = logging.getLogger(__name__)

TOOL_VERSION = "0.1.0"


@dataclass(frozen=True)
class SurrogateModel:
    """Triangular map plus one oscillator per map coordinate (map order)."""

    map: MonotoneTriangularMap
    oscillators: Tuple[OscillatorParams, ...]
    dt: float
    provenance: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if len(self.oscillators) != self.map.dim:
            raise ConfigurationError(
                f"{len(self.oscillators)} oscillators for a {self.map.dim}-dimensional map"
            )
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "oscillators", tuple(self.oscillators))

    @property
    def names(self) -> Tuple[str, ...]:
        return self.map.names

    @property
    def ordering(self) -> Tuple[int, ...]:
        return self.map.ordering


@dataclass(frozen=True)
class Generation:
    series: TimeSeries
    clamp_fraction: float
    warnings: List[str]
    seeds: Dict[str, Any]


@dataclass(frozen=True)
class CovariateRank:
    name: str
    index: int
    correlation: float


# ---------------------- Fitting ----------------------

async def afit_surrogate(
    ts: TimeSeries,
    degree: Optional[int] = None,
    match: str = "psd",
    ordering: Optional[Sequence[int]] = None,
    seed: int = 0,
    nperseg: Optional[int] = None,
    config: Optional[Configuration] = None,
) -> SurrogateModel:
    """Fit map and oscillators by running the fitting graph."""
    if match not in MATCH_MODES:
        raise ConfigurationError(f"match must be one of {MATCH_MODES}, got {match!r}")
    cfg = config or Configuration()
    degree = int(degree or cfg.degree)
    state = await fit_graph.ainvoke(
        {
            "series": ts,
            "degree": degree,
            "ordering": list(ordering) if ordering is not None else None,
            "match": match,
            "seed": int(seed),
            "nperseg": nperseg,
        },
        config={"configurable": cfg.model_dump()},
    )
    tmap: MonotoneTriangularMap = state["transport_map"]
    oscillators = tuple(OscillatorParams(**o) for o in state["oscillators"])
    provenance = {
        "tool_version": TOOL_VERSION,
        "training_samples": ts.n_samples,
        "training_duration": ts.duration,
        "degree": degree,
        "match": match,
        "seed": int(seed),
        "seed_rule": SEED_RULE,
        "pso_seeds": {str(j): list(k) for j, k in derived_seeds(seed, STREAM_PSO, tmap.dim).items()},
        "config": cfg.model_dump(mode="json"),
        "diagnostics": state["diagnostics"],
    }
    for msg in state["diagnostics"]["warnings"]:
        logger.warning(f"fit quality flag: {msg}")
    return SurrogateModel(map=tmap, oscillators=oscillators, dt=ts.dt, provenance=provenance)


def fit_surrogate(
    ts: TimeSeries,
    degree: Optional[int] = None,
    match: str = "psd",
    ordering: Optional[Sequence[int]] = None,
    seed: int = 0,
    nperseg: Optional[int] = None,
    config: Optional[Configuration] = None,
) -> SurrogateModel:
    """Synchronous wrapper around `afit_surrogate`."""
    return asyncio.run(afit_surrogate(ts, degree, match, ordering, seed, nperseg, config))


# ---------------------- Generation ----------------------

async def agenerate(
    model: SurrogateModel,
    T: float,
    rng_seed: int = 0,
    config: Optional[Configuration] = None,
) -> Generation:
    """Simulate every oscillator (stationary start) and pull back through the inverse map."""
    cfg = config or Configuration()
    if T < model.dt * (1 - 1e-12):
        raise ConfigurationError(f"duration T={T} is shorter than dt={model.dt}")
    sem = asyncio.Semaphore(cfg.max_concurrency)

    async def _simulate(j: int) -> np.ndarray:
        async with sem:
            rng = channel_rng(rng_seed, STREAM_OSCILLATOR, j)
            path = await asyncio.to_thread(simulate, model.oscillators[j], T, model.dt, rng)
            return path.values[:, 0]

    paths = await asyncio.gather(*[_simulate(j) for j in range(model.map.dim)])
    q = np.column_stack(paths)
    y, clamped = await asyncio.to_thread(inverse_samples, model.map, q)
    clamp_fraction = float(np.mean(clamped))
    warnings: List[str] = []
    if clamp_fraction > cfg.clamp_warn_fraction:
        msg = f"{clamp_fraction:.2%} of samples were clamped to the monotone domain"
        logger.warning(msg)
        warnings.append(msg)
    else:
        logger.info(f"generated {q.shape[0]} samples, clamp fraction {clamp_fraction:.4%}")
    seeds = {
        "master": int(rng_seed),
        "seed_rule": SEED_RULE,
        "oscillator_seeds": {str(j): list(k) for j, k in derived_seeds(rng_seed, STREAM_OSCILLATOR, model.map.dim).items()},
    }
    return Generation(
        series=TimeSeries(y, model.dt, model.names),
        clamp_fraction=clamp_fraction,
        warnings=warnings,
        seeds=seeds,
    )


def generate_report(
    model: SurrogateModel, T: float, rng_seed: int = 0, config: Optional[Configuration] = None
) -> Generation:
    return asyncio.run(agenerate(model, T, rng_seed, config))


def generate(model: SurrogateModel, T: float, rng_seed: int = 0, config: Optional[Configuration] = None) -> TimeSeries:
    """Surrogate record of duration T (channels in the training input order)."""
    return generate_report(model, T, rng_seed, config).series


def transformed_channels(model: SurrogateModel, ts: TimeSeries) -> TimeSeries:
    """Push a record through the model's map; channels come out in map order."""
    if ts.n_channels != model.map.dim:
        raise ConfigurationError(f"record has {ts.n_channels} channels, model expects {model.map.dim}")
    return TimeSeries(transport_samples(model.map, ts.values), ts.dt, model.map.map_names)


# ---------------------- Covariates ----------------------

def rank_covariates(target: Union[TimeSeries, np.ndarray], candidates: TimeSeries) -> List[CovariateRank]:
    """Candidates sorted by |Pearson correlation| with the target, strongest first.

    Constant candidates are left out with a warning.
    """
    y = as_channel(target)
    if y.size != candidates.n_samples:
        raise ConfigurationError(f"target has {y.size} samples, candidates {candidates.n_samples}")
    if not np.std(y) > 0:
        raise DegenerateChannelError("target")
    ranked: List[CovariateRank] = []
    for j, name in enumerate(candidates.names):
        x = candidates.values[:, j]
        if not np.std(x) > 0:
            logger.warning(f"covariate {name} is constant; excluded")
            continue
        r = float(np.corrcoef(x, y)[0, 1])
        ranked.append(CovariateRank(name=name, index=j, correlation=r))
    ranked.sort(key=lambda c: (-abs(c.correlation), c.index))
    return ranked


def modeling_record(target: TimeSeries, candidates: TimeSeries, n: int) -> TimeSeries:
    """Top-n covariates followed by the target, which sits at the bottom of the map."""
    ranked = rank_covariates(target, candidates)
    if n > len(ranked):
        raise ConfigurationError(f"requested {n} covariates, only {len(ranked)} usable")
    cols = [candidates.values[:, c.index] for c in ranked[:n]] + [as_channel(target)]
    names = tuple(c.name for c in ranked[:n]) + (target.names[0],)
    return TimeSeries(np.column_stack(cols), target.dt, names)


def covariate_models(
    target: TimeSeries,
    candidates: TimeSeries,
    n_list: Sequence[int],
    degree: Optional[int] = None,
    match: str = "psd",
    seed: int = 0,
    config: Optional[Configuration] = None,
) -> Dict[int, SurrogateModel]:
    """One surrogate per covariate count in `n_list`."""
    return {
        int(n): fit_surrogate(modeling_record(target, candidates, int(n)), degree, match, None, seed, None, config)
        for n in n_list
    }


# ---------------------- Model files ----------------------

def model_to_dict(model: SurrogateModel) -> Dict[str, Any]:
    return {
        "version": 1,
        "kind": "chaos-surrogate-model",
        "dt": model.dt,
        "names": list(model.names),
        "map": map_to_dict(model.map),
        "oscillators": [o.as_dict() for o in model.oscillators],
        "provenance": model.provenance,
    }


def save_model(model: SurrogateModel, path: Union[str, Path]) -> None:
    """Write the model as JSON; floats use repr so they round-trip exactly."""
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2, allow_nan=True, default=_json_default))


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    return str(obj)


def model_from_dict(data: Dict[str, Any]) -> SurrogateModel:
    try:
        record = ModelFile.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        raise ModelFileError(".".join(str(p) for p in err["loc"]) or "model", err["msg"]) from e
    if len(record.oscillators) != len(record.map.components):
        raise ModelFileError("oscillators", f"{len(record.oscillators)} oscillators for {len(record.map.components)} components")
    oscillators = []
    for j, o in enumerate(record.oscillators):
        if abs(o.D - o.k * o.beta) > 1e-9 * o.k * o.beta:
            raise ModelFileError(f"oscillators.{j}.D", f"D={o.D!r} violates D = k*beta = {o.k * o.beta!r}")
        oscillators.append(OscillatorParams(k=o.k, beta=o.beta, D=o.D))
    try:
        tmap = map_from_dict(record.map.model_dump())
    except ConfigurationError as e:
        raise ModelFileError("map", str(e)) from e
    if list(tmap.names) != record.names:
        raise ModelFileError("names", "channel names differ from the map's")
    return SurrogateModel(map=tmap, oscillators=tuple(oscillators), dt=record.dt, provenance=record.provenance)


def load_model(path: Union[str, Path]) -> SurrogateModel:
    """Read and validate a model file."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFileError("file", f"not valid JSON: {e.msg} at line {e.lineno}") from e
    if not isinstance(data, dict):
        raise ModelFileError("file", "top level must be an object")
    return model_from_dict(data)
