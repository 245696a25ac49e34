"""
Named, independent random streams.

Each stream is derived from (seed, stream name) alone, so drawing from one
stream never shifts the values another stream produces.
"""

import hashlib
from typing import Dict

import numpy as np

STREAM_NAMES = (
    "arrivals",
    "due-dates",
    "processing-times",
    "layout",
    "breakdowns",
    "exploration",
    "weight-init",
)


def stream_key(name: str) -> int:
    """Stable 64-bit integer for a stream name (independent of PYTHONHASHSEED)."""
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed: int, name: str) -> np.random.Generator:
    """Build the generator for one named stream."""
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    return np.random.default_rng(np.random.SeedSequence([int(seed), stream_key(name)]))


class SeededStreams:
    """Lazily created generators keyed by stream name.

    Args:
        seed: Master seed (64-bit, nonnegative).
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: Dict[str, np.random.Generator] = {}

    def get(self, name: str) -> np.random.Generator:
        if name not in self._streams:
            self._streams[name] = make_rng(self.seed, name)
        return self._streams[name]

    def __getitem__(self, name: str) -> np.random.Generator:
        return self.get(name)
