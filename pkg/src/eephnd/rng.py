"""Seeded, stream-partitioned random number generation.

Each :class:`RngStream` owns a Philox-4x64 counter-based generator keyed by
``(seed, stream_id)``, so distinct stream ids under one seed never share
state and any stream can be reconstructed independently of the others.
"""

from __future__ import annotations

import numpy as np

ALGORITHM = "philox4x64-10/numpy"
_MASK64 = (1 << 64) - 1


class RngStream:
    """Single-owner random stream. Do not share one instance across threads."""

    def __init__(self, seed: int = 0, stream_id: int = 0):
        if not (0 <= seed <= _MASK64 and 0 <= stream_id <= _MASK64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = self.seed | (self.stream_id << 64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    @property
    def metadata(self) -> dict:
        return {"seed": self.seed, "stream_id": self.stream_id, "algorithm": ALGORITHM}

    def spawn(self, stream_id: int) -> "RngStream":
        """A fresh stream under the same seed."""
        return RngStream(self.seed, stream_id)

    def integers(self, high: int, size: int) -> np.ndarray:
        return self._gen.integers(0, high, size=size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def uniform01(stream: RngStream, size: int | None = None):
    """Uniform draws on the open interval (0, 1).

    The underlying generator yields multiples of 2**-53 in [0, 1); exact zeros
    are rejected and redrawn, so log and quantile transforms stay finite.
    """
    if size is None:
        u = 0.0
        while u == 0.0:
            u = stream._gen.random()
        return u
    u = stream._gen.random(size)
    zero = u == 0.0
    while np.any(zero):
        u[zero] = stream._gen.random(int(zero.sum()))
        zero = u == 0.0
    return u


def standard_normal(stream: RngStream, size: int | None = None):
    if size is None:
        return float(stream._gen.standard_normal())
    return stream._gen.standard_normal(size)
