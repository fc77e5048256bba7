# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Polya-Gamma kernel.

Exact PG(1, c) draws via the alternating-series accept-reject scheme on the
Jacobi J*(1, z) density (proposal: truncated inverse-Gaussian below the
crossover point t = 0.64 and a shifted exponential above it).  Integer-b
draws are sums of b unit draws.

The kernel owns a xoshiro256++ state seeded per call from two 64-bit words
supplied by the caller, keeping the package-level stream semantics in one
place (bibdr.pg).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport M_PI, cos, erfc, exp, log, sqrt

cnp.import_array()

cdef double TRUNC = 0.64
cdef double TRUNC_RECIP = 1.0 / 0.64


# ----------------------------------------------------------------------
# xoshiro256++ with splitmix64 seeding
# ----------------------------------------------------------------------

cdef struct XoshiroState:
    unsigned long long s0, s1, s2, s3


cdef inline unsigned long long _splitmix64(unsigned long long *x) nogil:
    cdef unsigned long long z
    x[0] += <unsigned long long>0x9E3779B97F4A7C15
    z = x[0]
    z = (z ^ (z >> 30)) * <unsigned long long>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <unsigned long long>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline void _seed(XoshiroState *st, unsigned long long k0,
                       unsigned long long k1) nogil:
    cdef unsigned long long x = k0 ^ (k1 * <unsigned long long>0x9E3779B97F4A7C15)
    st.s0 = _splitmix64(&x)
    st.s1 = _splitmix64(&x)
    st.s2 = _splitmix64(&x)
    st.s3 = _splitmix64(&x)


cdef inline unsigned long long _rotl(unsigned long long v, int k) nogil:
    return (v << k) | (v >> (64 - k))


cdef inline unsigned long long _next(XoshiroState *st) nogil:
    cdef unsigned long long result = _rotl(st.s0 + st.s3, 23) + st.s0
    cdef unsigned long long t = st.s1 << 17
    st.s2 ^= st.s0
    st.s3 ^= st.s1
    st.s1 ^= st.s2
    st.s0 ^= st.s3
    st.s2 ^= t
    st.s3 = _rotl(st.s3, 45)
    return result


cdef inline double _unif(XoshiroState *st) nogil:
    # uniform on (0, 1); never returns 0 so logs are safe
    return ((_next(st) >> 11) + 0.5) * (1.0 / 9007199254740992.0)


cdef inline double _expon(XoshiroState *st) nogil:
    return -log(_unif(st))


cdef inline double _norm(XoshiroState *st) nogil:
    # Box-Muller; the spare is dropped (simplicity over speed here)
    cdef double u1 = _unif(st)
    cdef double u2 = _unif(st)
    return sqrt(-2.0 * log(u1)) * cos(2.0 * M_PI * u2)


# ----------------------------------------------------------------------
# Devroye-style PG(1, z) sampler
# ----------------------------------------------------------------------

cdef inline double _pnorm(double x) nogil:
    return 0.5 * erfc(-x * 0.7071067811865476)


cdef inline double _a_coef(int n, double x) nogil:
    cdef double h = n + 0.5
    if x > TRUNC:
        return M_PI * h * exp(-0.5 * h * h * M_PI * M_PI * x)
    return pow_three_halves(2.0 / (M_PI * x)) * M_PI * h * exp(-2.0 * h * h / x)


cdef inline double pow_three_halves(double v) nogil:
    return v * sqrt(v)


cdef inline double _mass_texpon(double z) nogil:
    # probability of taking the shifted-exponential branch of the proposal
    cdef double t = TRUNC
    cdef double fz = 0.125 * M_PI * M_PI + 0.5 * z * z
    cdef double b = sqrt(1.0 / t) * (t * z - 1.0)
    cdef double a = -sqrt(1.0 / t) * (t * z + 1.0)
    cdef double x0 = log(fz) + fz * t
    cdef double xb = x0 - z + log(_pnorm(b))
    cdef double xa = x0 + z + log(_pnorm(a))
    cdef double qdivp = 4.0 / M_PI * (exp(xb) + exp(xa))
    return 1.0 / (1.0 + qdivp)


cdef inline double _rtigauss(double z, XoshiroState *st) nogil:
    # inverse-Gaussian(mu=1/z, 1) truncated to (0, TRUNC]
    cdef double t = TRUNC
    cdef double x = t + 1.0
    cdef double alpha, e1, e2, mu, y, half_mu, mu_y
    if TRUNC_RECIP > z:
        alpha = 0.0
        while _unif(st) > alpha:
            e1 = _expon(st)
            e2 = _expon(st)
            while e1 * e1 > 2.0 * e2 / t:
                e1 = _expon(st)
                e2 = _expon(st)
            x = t / ((1.0 + t * e1) * (1.0 + t * e1))
            alpha = exp(-0.5 * z * z * x)
    else:
        mu = 1.0 / z
        while x > t:
            y = _norm(st)
            y = y * y
            half_mu = 0.5 * mu
            mu_y = mu * y
            x = mu + half_mu * mu_y - half_mu * sqrt(4.0 * mu_y + mu_y * mu_y)
            if _unif(st) > mu / (mu + x):
                x = mu * mu / x
    return x


cdef double _draw_pg1(double c, XoshiroState *st) nogil:
    cdef double z = 0.5 * (c if c >= 0 else -c)
    cdef double fz = 0.125 * M_PI * M_PI + 0.5 * z * z
    cdef double ratio = _mass_texpon(z)
    cdef double x, s, y
    cdef int n
    while True:
        if _unif(st) < ratio:
            x = TRUNC + _expon(st) / fz
        else:
            x = _rtigauss(z, st)
        s = _a_coef(0, x)
        y = _unif(st) * s
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


def draw_pg_vector(cnp.int64_t[::1] b, double[::1] c,
                   unsigned long long key0, unsigned long long key1,
                   long approx_above=-1):
    """Vector of PG(b[i], c[i]) draws.

    approx_above < 0 disables the moment-matched normal branch; otherwise
    counts above the cutoff use it.
    """
    cdef Py_ssize_t n = b.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef XoshiroState st
    _seed(&st, key0, key1)
    cdef Py_ssize_t i
    cdef long j, bi
    cdef double acc, ci, m, v, cz, ch, sh, d
    with nogil:
        for i in range(n):
            bi = b[i]
            ci = c[i]
            if approx_above >= 0 and bi > approx_above:
                # moment-matched normal, clipped to the positive support
                cz = ci if ci >= 0 else -ci
                if cz < 1e-8:
                    m = bi / 4.0
                    v = bi / 24.0
                else:
                    m = bi / (2.0 * cz) * ((1.0 - exp(-cz)) / (1.0 + exp(-cz)))
                    sh = 0.5 * (exp(cz) - exp(-cz))
                    ch = 0.5 * (exp(cz / 2.0) + exp(-cz / 2.0))
                    v = bi / (4.0 * cz * cz * cz) * (sh - cz) / (ch * ch)
                d = m + sqrt(v) * _norm(&st)
                out[i] = d if d > 1e-12 else 1e-12
            else:
                acc = 0.0
                for j in range(bi):
                    acc += _draw_pg1(ci, &st)
                out[i] = acc
    return out_arr
