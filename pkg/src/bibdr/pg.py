"""Polya-Gamma draws with compiled/pure backend selection at import.

PG(b, c) for integer b >= 1 is drawn exactly as a sum of b unit draws; an
optional moment-matched normal branch handles counts above a caller-chosen
cutoff (disabled by default).  Draws depend on |c| only.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidShape
from .rng import RngStream

try:
    from . import _pg_cython

    BACKEND = "cython"
except ImportError:  # pragma: no cover - exercised only without the extension
    _pg_cython = None
    BACKEND = "python"


def draw_pg_vector(b, c, rng: RngStream, approx_above: int | None = None):
    """Vector of independent PG(b[i], c[i]) draws."""
    b = np.atleast_1d(np.asarray(b, dtype=np.int64))
    c = np.atleast_1d(np.asarray(c, dtype=np.float64))
    if b.shape != c.shape:
        b, c = np.broadcast_arrays(b, c)
        b = np.ascontiguousarray(b)
        c = np.ascontiguousarray(c)
    if np.any(b < 1):
        raise InvalidShape("PG requires integer b >= 1")
    if not np.all(np.isfinite(c)):
        raise InvalidShape("PG tilt c must be finite")
    cutoff = -1 if approx_above is None else int(approx_above)
    if _pg_cython is not None:
        key = rng.generator.integers(0, 2**64, size=2, dtype=np.uint64)
        return _pg_cython.draw_pg_vector(
            np.ascontiguousarray(b), np.ascontiguousarray(c),
            int(key[0]), int(key[1]), cutoff,
        )
    from . import _pg_python

    return _pg_python.draw_pg_vector(b, c, rng.generator, cutoff)


def draw_pg(b: int, c: float, rng: RngStream, approx_above: int | None = None) -> float:
    """Single PG(b, c) draw."""
    return float(draw_pg_vector([b], [c], rng, approx_above)[0])
