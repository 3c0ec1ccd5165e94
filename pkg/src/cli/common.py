"""Helpers shared by the command modules."""

import argparse
import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.modeling.configuration import Configuration
from src.modeling.errors import ConfigurationError
from src.modeling.seeding import SEED_RULE
from src.modeling.surrogate import TOOL_VERSION
from src.modeling.timeseries import TimeSeries

_NOT_ECHOED = {"handler"}


@dataclass
class CommandResult:
    outputs: List[str] = field(default_factory=list)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    seeds: Dict[str, Any] = field(default_factory=dict)


def _default(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return dataclasses.asdict(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    return str(obj)


def jsonable(obj: Any) -> Any:
    """Plain JSON types only (numpy scalars and arrays converted)."""
    return json.loads(json.dumps(obj, default=_default, sort_keys=True))


def configuration_from_args(args: argparse.Namespace) -> Configuration:
    overrides = {k: v for k, v in vars(args).items() if k in Configuration.model_fields and v is not None}
    return Configuration.from_overrides(**overrides)


def config_echo(args: argparse.Namespace, cfg: Configuration) -> Dict[str, Any]:
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_ECHOED}
    return jsonable({"command": args.command, "flags": flags, "configuration": cfg.model_dump(mode="json")})


def seed_echo(**seeds: int) -> Dict[str, Any]:
    return {**{k: int(v) for k, v in seeds.items()}, "seed_rule": SEED_RULE}


def csv_metadata(args: argparse.Namespace, cfg: Configuration, **extra: Any) -> Dict[str, Any]:
    """Provenance lines for CSV outputs: tool version, config echo, extras."""
    return {"tool_version": TOOL_VERSION, "config": config_echo(args, cfg), **jsonable(extra)}


def parse_int_list(text: Optional[str]) -> Optional[List[int]]:
    if text is None or not text.strip():
        return None
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"expected comma-separated integers, got {text!r}")


def parse_float_pair(text: Optional[str]) -> Optional[Tuple[float, float]]:
    if text is None:
        return None
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 2:
        raise ConfigurationError(f"expected 'lo,hi', got {text!r}")
    return float(parts[0]), float(parts[1])


def select_channel(ts: TimeSeries, key: Optional[str]) -> Tuple[np.ndarray, str]:
    """Channel by name or 1-based index; the first channel by default."""
    if key is None:
        return np.asarray(ts.values[:, 0]), ts.names[0]
    if key in ts.names:
        j = ts.names.index(key)
    else:
        try:
            j = int(key) - 1
        except ValueError:
            raise ConfigurationError(f"no channel {key!r}; have {list(ts.names)}")
        if not 0 <= j < ts.n_channels:
            raise ConfigurationError(f"channel index {key} out of range 1..{ts.n_channels}")
    return np.asarray(ts.values[:, j]), ts.names[j]


def add_config_flags(parser: argparse.ArgumentParser, *names: str) -> None:
    """`--<field>` flags that override Configuration fields for this run."""
    for name in names:
        annotation = Configuration.model_fields[name].annotation
        flag = "--" + name.replace("_", "-")
        if annotation is bool:
            parser.add_argument(flag, dest=name, action=argparse.BooleanOptionalAction, default=None)
        else:
            parser.add_argument(flag, dest=name, type=annotation, default=None, help=f"override {name}")
