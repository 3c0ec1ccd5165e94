"""Counter-based seed splitting.

Every stochastic step draws from `numpy.random.Generator` objects built from
``SeedSequence(master, spawn_key=key)``. The key is a tuple of small integers
(stream purpose, channel index, ...), so streams are independent of how many
workers run and in which order they finish.
"""

from typing import Dict, Tuple, Union

import numpy as np

from src.modeling.errors import ConfigurationError

SEED_RULE = "numpy.random.SeedSequence(entropy=master, spawn_key=(stream, index))"

# stream identifiers
STREAM_OSCILLATOR = 1
STREAM_PSO = 2
STREAM_RPM = 3
STREAM_LORENZ = 4
STREAM_SYNTH = 5


def channel_seed_sequence(master: int, *key: int) -> np.random.SeedSequence:
    """Return the seed sequence for `key` under `master`."""
    if master < 0:
        raise ConfigurationError(f"seed must be nonnegative, got {master}")
    return np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in key))


def channel_rng(master: int, *key: int) -> np.random.Generator:
    """Return an independent generator for `key` under `master`."""
    return np.random.default_rng(channel_seed_sequence(master, *key))


def derived_seeds(master: int, stream: int, count: int) -> Dict[int, Tuple[int, ...]]:
    """Describe the spawn keys used for `count` channels (recorded in provenance)."""
    return {j: (stream, j) for j in range(count)}


def as_rng(seed: Union[int, np.random.Generator, None]) -> np.random.Generator:
    """Pass a generator through; build one from an integer seed otherwise."""
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
