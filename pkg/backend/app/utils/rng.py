"""
Counter-based random streams.

Every disturbance channel gets its own stream keyed by (seed, channel name).
A draw is addressed by an integer counter, so values depend only on
(seed, channel, counter): never on evaluation order or on other channels.
"""
import zlib
from typing import Dict, Tuple

import numpy as np

_MASK64 = (1 << 64) - 1


def channel_key(seed: int, channel: str) -> int:
    # crc32 is stable across processes, unlike hash()
    crc = zlib.crc32(channel.encode("utf-8")) & 0xFFFFFFFF
    return (int(seed) & _MASK64) | (crc << 64)


class CounterStream:
    """Philox-backed stream: draw `n` -> fixed value for this (seed, channel)."""

    def __init__(self, seed: int, channel: str):
        self.seed = int(seed)
        self.channel = channel
        self._key = channel_key(seed, channel)
        # last draw per kind; piecewise signals re-read the same counter many times
        self._last: Dict[str, Tuple[int, float]] = {}

    def _generator(self, counter: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self._key, counter=int(counter) & _MASK64))

    def _cached(self, kind: str, counter: int):
        hit = self._last.get(kind)
        if hit is not None and hit[0] == counter:
            return hit[1]
        return None

    def uniform(self, counter: int, low: float = 0.0, high: float = 1.0) -> float:
        kind = f"u:{low}:{high}"
        value = self._cached(kind, counter)
        if value is None:
            value = float(self._generator(counter).uniform(low, high))
            self._last[kind] = (counter, value)
        return value

    def normal(self, counter: int, sigma: float = 1.0) -> float:
        return float(self._generator(counter).normal(0.0, sigma))
