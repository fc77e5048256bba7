"""Pure-Python Polya-Gamma sampler, used when the compiled core is absent.

Same exact alternating-series accept-reject scheme as the Cython kernel,
but consuming a numpy Generator directly.  Roughly two orders of magnitude
slower; see benchmarks/pg_benchmark.py.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

_TRUNC = 0.64
_TRUNC_RECIP = 1.0 / 0.64


def _a_coef(n: int, x: float) -> float:
    h = n + 0.5
    if x > _TRUNC:
        return math.pi * h * math.exp(-0.5 * h * h * math.pi**2 * x)
    return (2.0 / (math.pi * x)) ** 1.5 * math.pi * h * math.exp(-2.0 * h * h / x)


def _mass_texpon(z: float) -> float:
    t = _TRUNC
    fz = 0.125 * math.pi**2 + 0.5 * z * z
    b = math.sqrt(1.0 / t) * (t * z - 1.0)
    a = -math.sqrt(1.0 / t) * (t * z + 1.0)
    x0 = math.log(fz) + fz * t
    xb = x0 - z + math.log(ndtr(b))
    xa = x0 + z + math.log(ndtr(a))
    qdivp = 4.0 / math.pi * (math.exp(xb) + math.exp(xa))
    return 1.0 / (1.0 + qdivp)


def _rtigauss(z: float, gen: np.random.Generator) -> float:
    t = _TRUNC
    x = t + 1.0
    if _TRUNC_RECIP > z:
        alpha = 0.0
        while gen.random() > alpha:
            e1 = gen.standard_exponential()
            e2 = gen.standard_exponential()
            while e1 * e1 > 2.0 * e2 / t:
                e1 = gen.standard_exponential()
                e2 = gen.standard_exponential()
            x = t / ((1.0 + t * e1) ** 2)
            alpha = math.exp(-0.5 * z * z * x)
    else:
        mu = 1.0 / z
        while x > t:
            y = gen.standard_normal() ** 2
            mu_y = mu * y
            x = mu + 0.5 * mu * mu_y - 0.5 * mu * math.sqrt(4.0 * mu_y + mu_y * mu_y)
            if gen.random() > mu / (mu + x):
                x = mu * mu / x
    return x


def _draw_pg1(c: float, gen: np.random.Generator) -> float:
    z = 0.5 * abs(c)
    fz = 0.125 * math.pi**2 + 0.5 * z * z
    ratio = _mass_texpon(z)
    while True:
        if gen.random() < ratio:
            x = _TRUNC + gen.standard_exponential() / fz
        else:
            x = _rtigauss(z, gen)
        s = _a_coef(0, x)
        y = gen.random() * s
        n = 0
        while True:
            n += 1
            if n % 2 == 1:
                s -= _a_coef(n, x)
                if y <= s:
                    break
            else:
                s += _a_coef(n, x)
                if y > s:
                    break
        if y <= s:
            return 0.25 * x


def _pg_moments(b, cz):
    if cz < 1e-8:
        return b / 4.0, b / 24.0
    m = b / (2.0 * cz) * math.tanh(cz / 2.0)
    v = b / (4.0 * cz**3) * (math.sinh(cz) - cz) / math.cosh(cz / 2.0) ** 2
    return m, v


def draw_pg_vector(b, c, gen: np.random.Generator, approx_above: int = -1):
    b = np.asarray(b, dtype=np.int64)
    c = np.asarray(c, dtype=np.float64)
    out = np.empty(b.shape[0], dtype=np.float64)
    for i in range(b.shape[0]):
        bi = int(b[i])
        ci = float(c[i])
        if approx_above >= 0 and bi > approx_above:
            m, v = _pg_moments(bi, abs(ci))
            out[i] = max(m + math.sqrt(v) * gen.standard_normal(), 1e-12)
        else:
            out[i] = sum(_draw_pg1(ci, gen) for _ in range(bi))
    return out
