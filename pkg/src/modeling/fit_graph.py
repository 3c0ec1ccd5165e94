"""
Surrogate fitting graph: learn the transport map, then fit one oscillator per transformed channel.

- Fit the triangular map on the standardized record (components run concurrently)
- Push the training record through the map
- Fit each transformed channel's oscillator in parallel (one Send task per channel)
- Assemble the per-channel results in channel order
"""

import asyncio
import logging
import weakref
from typing import Any, Dict, List

import numpy as np
from langchain_core.runnables import RunnableConfig
from langgraph.graph import END, START, StateGraph
from langgraph.types import Send

from src.modeling.configuration import Configuration
from src.modeling.oscillator import OscillatorFit, fit_oscillator_autocorr_report, fit_oscillator_report
from src.modeling.seeding import STREAM_PSO, channel_rng
from src.modeling.spectral import welch_psd
from src.modeling.state import ChannelFitState, FitState
from src.modeling.timeseries import autocorrelation
from src.modeling.transport import afit_map, transport_samples

logger = logging.getLogger(__name__)

MATCH_MODES = ("psd", "autocorr")

# Bounded concurrency for channel fits, one semaphore per (event loop, limit)
_CHANNEL_SEMS: "weakref.WeakKeyDictionary[asyncio.AbstractEventLoop, Dict[int, asyncio.Semaphore]]" = (
    weakref.WeakKeyDictionary()
)


def _channel_semaphore(limit: int) -> asyncio.Semaphore:
    per_loop = _CHANNEL_SEMS.setdefault(asyncio.get_running_loop(), {})
    sem = per_loop.get(limit)
    if sem is None:
        sem = per_loop[limit] = asyncio.Semaphore(limit)
    return sem


# ---------------------- Node Functions ----------------------

async def fit_transport(state: FitState, config: RunnableConfig) -> FitState:
    """Fit the triangular map and transform the training record."""
    cfg = Configuration.from_runnable_config(config)
    ts = state["series"]
    degree = int(state.get("degree") or cfg.degree)
    tmap = await afit_map(ts, degree, state.get("ordering"), cfg)
    transformed = await asyncio.to_thread(transport_samples, tmap, ts.values)
    logger.info(f"transport map fitted: N={tmap.dim}, degree={degree}, ordering={list(tmap.ordering)}")
    return {
        "transport_map": tmap,
        "transformed": transformed,
        # initialize accumulators for the parallel map
        "channel_fits": [],
        "warnings": list(tmap.warnings),
    }


def _fit_channel(payload: ChannelFitState, cfg: Configuration) -> OscillatorFit:
    j = payload["index"]
    rng = channel_rng(payload["seed"], STREAM_PSO, j)
    if payload["match"] == "autocorr":
        r = autocorrelation(payload["values"], cfg.acf_max_lag)
        return fit_oscillator_autocorr_report(r, payload["dt"], cfg.acf_max_lag, rng, cfg)
    s = welch_psd(payload["values"], payload["dt"], nperseg=payload.get("nperseg"))
    return fit_oscillator_report(s, "pso", rng, cfg)


async def fit_channel_oscillator(state: ChannelFitState, config: RunnableConfig) -> Dict[str, Any]:
    """Fit one oscillator to one transformed channel.

    Input state carries the channel values and index. Returns {"channel_fits": [result]}.
    """
    cfg = Configuration.from_runnable_config(config)
    j = state["index"]
    variance = float(np.var(state["values"], ddof=1))
    warnings: List[str] = []
    lo, hi = cfg.variance_window
    if not lo <= variance <= hi:
        msg = f"transformed channel {j} ({state.get('name', j)}) has variance {variance:.3f} outside [{lo}, {hi}]"
        logger.warning(msg)
        warnings.append(msg)

    async with _channel_semaphore(cfg.max_concurrency):
        fit = await asyncio.to_thread(_fit_channel, state, cfg)
    return {
        "channel_fits": [{"index": j, "fit": fit, "variance": variance}],
        "warnings": warnings,
    }


def dispatch_oscillator_fits(state: FitState) -> List[Send]:
    """Dispatch one Send per transformed channel."""
    q = state["transformed"]
    tmap = state["transport_map"]
    dt = state["series"].dt
    return [
        Send(
            "fit_channel_oscillator",
            {
                "index": j,
                "name": tmap.map_names[j],
                "values": q[:, j],
                "dt": dt,
                "match": state.get("match", "psd"),
                "seed": int(state.get("seed", 0)),
                "nperseg": state.get("nperseg"),
            },
        )
        for j in range(q.shape[1])
    ]


async def assemble_model(state: FitState, config: RunnableConfig) -> FitState:
    """Order channel results and collect diagnostics."""
    fits = sorted(state.get("channel_fits", []) or [], key=lambda r: r["index"])
    tmap = state["transport_map"]
    if [r["index"] for r in fits] != list(range(tmap.dim)):
        raise RuntimeError(f"expected {tmap.dim} channel fits, got indices {[r['index'] for r in fits]}")
    oscillators = [r["fit"].params.as_dict() for r in fits]
    diagnostics = {
        "map_components": [c.diagnostics for c in tmap.components],
        "monotone_domain": [list(d) for d in tmap.monotone_domain],
        "channels": [
            {
                "name": tmap.map_names[r["index"]],
                "delta": r["fit"].delta,
                "method": r["fit"].method,
                "n_evals": r["fit"].n_evals,
                "polished": r["fit"].polished,
                "transformed_variance": r["variance"],
            }
            for r in fits
        ],
        "warnings": list(state.get("warnings", []) or []),
    }
    return {"oscillators": oscillators, "diagnostics": diagnostics}


# Build the state graph
builder = StateGraph(FitState)

builder.add_node("fit_transport", fit_transport)
builder.add_node("fit_channel_oscillator", fit_channel_oscillator)
builder.add_node("assemble_model", assemble_model)

builder.add_edge(START, "fit_transport")
# Send fan-out: one oscillator fit per transformed channel
builder.add_conditional_edges(
    "fit_transport",
    dispatch_oscillator_fits,
    ["fit_channel_oscillator"],
)
# Join: assemble waits for every channel task
builder.add_edge("fit_channel_oscillator", "assemble_model")
builder.add_edge("assemble_model", END)

fit_graph = builder.compile()
