"""Seeded random-variate generation.

All randomness in the package flows through :class:`RngStream`, a thin
wrapper around a counter-based (Philox) bit generator keyed by
``(seed, stream_id)``.  Distinct stream ids give statistically independent
streams, so parallel workers (per threshold, chain, or replication) can be
seeded deterministically without coordination.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidShape, InvalidSimplex


class RngStream:
    """A reproducible random stream keyed by (seed, stream_id)."""

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.generator = np.random.Generator(
            np.random.Philox(key=np.array([self.seed, self.stream_id], dtype=np.uint64))
        )

    def child(self, stream_id: int) -> "RngStream":
        """Independent stream sharing this stream's seed."""
        return RngStream(self.seed, stream_id)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def draw_gamma(shape, rate, rng: RngStream):
    """Gamma draw under the shape-rate convention (mean = shape/rate)."""
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if np.any(shape <= 0) or np.any(rate <= 0):
        raise InvalidShape("gamma requires shape > 0 and rate > 0")
    return rng.generator.gamma(shape, 1.0 / rate)


def draw_categorical(probs, rng: RngStream) -> int:
    """Index i with probability probs[i]; renormalizes small drift."""
    p = np.asarray(probs, dtype=float)
    if np.any(p < 0):
        raise InvalidSimplex("negative probability")
    total = p.sum()
    if total <= 0:
        raise InvalidSimplex("probabilities sum to <= 0")
    p = p / total
    u = rng.generator.random()
    return int(np.searchsorted(np.cumsum(p), u, side="right").clip(0, p.size - 1))


def draw_binomial(n, p, rng: RngStream):
    """Binomial count(s) in [0, n]."""
    return rng.generator.binomial(n, p)
