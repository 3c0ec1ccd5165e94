from __future__ import annotations
from typing_extensions import TypedDict, Annotated
from typing import List, Optional, Dict, Any
import operator

import numpy as np

from src.modeling.timeseries import TimeSeries
from src.modeling.transport import MonotoneTriangularMap


class FitState(TypedDict, total=False):
    """State for the surrogate fitting graph."""
    # Inputs
    series: TimeSeries
    degree: int
    ordering: Optional[List[int]]
    match: str
    seed: int
    nperseg: Optional[int]
    # Fitted map and the training data pushed through it (map order)
    transport_map: MonotoneTriangularMap
    transformed: np.ndarray
    # Per-channel oscillator fits accumulator (parallel-safe concatenate)
    channel_fits: Annotated[List[Dict[str, Any]], operator.add]
    warnings: Annotated[List[str], operator.add]
    # Assembled output
    oscillators: List[Dict[str, Any]]
    diagnostics: Dict[str, Any]


class ChannelFitState(TypedDict, total=False):
    """Payload sent to one oscillator fit task."""
    index: int
    name: str
    values: np.ndarray
    dt: float
    match: str
    seed: int
    nperseg: Optional[int]
