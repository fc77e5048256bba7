"""Dense and block-tridiagonal Gaussian linear algebra.

Holds the Cholesky plumbing used by every Gaussian conditional plus the two
precision-based joint samplers for latent time series: a band-Cholesky
sampler over the assembled MT-band system and a two-pass block
forward/backward sampler that never forms the band.  Both draw exactly from
N(Q^-1 m, Q^-1) for a block-tridiagonal precision Q.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotPositiveDefinite
from .rng import RngStream

#: relative pivot tolerance: pivots below PIVOT_RTOL * max(diag) are rejected
PIVOT_RTOL = 1e-12


def cholesky(a: np.ndarray, jitter: float = 0.0) -> np.ndarray:
    """Lower-triangular L with a = L L^T.

    Raises NotPositiveDefinite when factorization fails or a pivot falls
    below the relative tolerance; an explicit ``jitter`` adds jitter*I
    before factorizing (off by default so bad covariances surface loudly).
    """
    a = np.asarray(a, dtype=float)
    if jitter:
        a = a + jitter * np.eye(a.shape[0])
    tol = PIVOT_RTOL * max(float(np.max(np.diag(a))), 1.0)
    try:
        lower = scipy.linalg.cholesky(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as err:
        raise NotPositiveDefinite(str(err)) from err
    if float(np.min(np.diag(lower))) ** 2 <= tol:
        raise NotPositiveDefinite("pivot below tolerance")
    return lower


def chol_solve(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve (L L^T) x = b given the lower factor."""
    return scipy.linalg.cho_solve((lower, True), b, check_finite=False)


def chol_logdet(lower: np.ndarray) -> float:
    """log det of L L^T."""
    return 2.0 * float(np.sum(np.log(np.diag(lower))))


@dataclass
class BlockTridiagonalPrecision:
    """Symmetric positive-definite MT x MT precision stored by blocks.

    diag_blocks: T matrices of shape (M, M); offdiag_blocks: T-1 matrices,
    entry t being block (t, t+1).  The dense form is never materialized by
    the samplers.
    """

    diag_blocks: list
    offdiag_blocks: list

    @property
    def T(self) -> int:
        return len(self.diag_blocks)

    @property
    def M(self) -> int:
        return self.diag_blocks[0].shape[0]

    def to_dense(self) -> np.ndarray:
        T, M = self.T, self.M
        q = np.zeros((M * T, M * T))
        for t in range(T):
            q[t * M:(t + 1) * M, t * M:(t + 1) * M] = self.diag_blocks[t]
        for t in range(T - 1):
            q[t * M:(t + 1) * M, (t + 1) * M:(t + 2) * M] = self.offdiag_blocks[t]
            q[(t + 1) * M:(t + 2) * M, t * M:(t + 1) * M] = self.offdiag_blocks[t].T
        return q


def random_walk_precision(c_inv: np.ndarray, tau: float, T: int) -> BlockTridiagonalPrecision:
    """tau * (H^T H kron c_inv) for the first-difference operator H."""
    blocks = [2.0 * tau * c_inv for _ in range(T - 1)] + [tau * c_inv]
    off = [-tau * c_inv for _ in range(T - 1)]
    return BlockTridiagonalPrecision(blocks, off)


def h_inverse_stack(v0: np.ndarray, T: int) -> np.ndarray:
    """T vertically stacked copies of v0 (inverse first-difference of (v0, 0, ..., 0))."""
    return np.tile(np.asarray(v0, dtype=float), T)


def h_forward_difference(v: np.ndarray, M: int) -> np.ndarray:
    """Blockwise first difference: block t maps to v_t - v_{t-1} (v_0 := 0)."""
    blocks = np.asarray(v, dtype=float).reshape(-1, M)
    out = blocks.copy()
    out[1:] -= blocks[:-1]
    return out.ravel()


def sample_mvn_from_precision_dense(m, q, rng: RngStream, size=None, noise=True):
    """Draw from N(Q^-1 m, Q^-1) with a dense precision Q.

    Reference oracle for the structured samplers.  noise=False returns the
    mean Q^-1 m; size=k returns a (k, dim) matrix of draws.
    """
    m = np.asarray(m, dtype=float)
    lower = cholesky(np.asarray(q, dtype=float))
    v = scipy.linalg.solve_triangular(lower, m, lower=True, check_finite=False)
    if not noise:
        return scipy.linalg.solve_triangular(lower.T, v, lower=False, check_finite=False)
    shape = (m.size,) if size is None else (m.size, size)
    eps = rng.generator.standard_normal(shape)
    x = scipy.linalg.solve_triangular(
        lower.T, v[:, None] + eps if size is not None else v + eps,
        lower=False, check_finite=False,
    )
    return x.T if size is not None else x


def _band_storage(q: BlockTridiagonalPrecision) -> np.ndarray:
    """Lower band storage (scipy cholesky_banded layout) of the MT system."""
    T, M = q.T, q.M
    n = M * T
    # bandwidth 2M-1: the off-diagonal block reaches from row t*M to (t+2)M-1
    ab = np.zeros((2 * M, n))
    for t in range(T):
        for jj in range(M):
            col = t * M + jj
            ab[: M - jj, col] = q.diag_blocks[t][jj:, jj]
            if t < T - 1:
                # block (t+1, t) = offdiag_blocks[t]^T occupies lags M-jj..2M-1-jj
                ab[M - jj: 2 * M - jj, col] = q.offdiag_blocks[t].T[:, jj]
    return ab


def sample_rue(m, q: BlockTridiagonalPrecision, rng: RngStream, size=None, noise=True):
    """Band-Cholesky draw from N(Q^-1 m, Q^-1).

    Assembles the MT band of Q, factors Q = L L^T with a banded Cholesky,
    solves L v = m forward, then back-substitutes L^T x = v + eps.
    """
    m = np.asarray(m, dtype=float)
    bw = 2 * q.M - 1
    ab = _band_storage(q)
    try:
        cb = scipy.linalg.cholesky_banded(ab, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as err:
        raise NotPositiveDefinite(str(err)) from err
    v = scipy.linalg.solve_banded((bw, 0), cb, m, check_finite=False)
    # solve_banded on (M, 0) treats cb rows as diagonals of L
    if not noise:
        return scipy.linalg.solve_banded((0, bw), _transpose_band(cb), v, check_finite=False)
    rhs = (v[:, None] + rng.generator.standard_normal((m.size, size))) if size is not None \
        else (v + rng.generator.standard_normal(m.size))
    x = scipy.linalg.solve_banded((0, bw), _transpose_band(cb), rhs, check_finite=False)
    return x.T if size is not None else x


def _transpose_band(cb: np.ndarray) -> np.ndarray:
    """Upper-band storage of L^T from lower-band storage of L."""
    bw, n = cb.shape[0] - 1, cb.shape[1]
    ub = np.zeros_like(cb)
    for k in range(bw + 1):
        # k-th subdiagonal of L becomes k-th superdiagonal of L^T
        ub[bw - k, k:] = cb[k, : n - k] if k else cb[0, :]
    return ub


def sample_mccausland(m_blocks, q: BlockTridiagonalPrecision, rng: RngStream,
                      size=None, noise=True):
    """Two-pass block sampler from N(Q^-1 m, Q^-1).

    Forward pass: Sigma_1^-1 = Q_11, Sigma_t^-1 = Q_tt - Q_{t-1,t}^T
    Sigma_{t-1} Q_{t-1,t}, with each Sigma_t represented by the Cholesky
    factor of its inverse; mu_t accumulates the partial solves.  Backward
    pass samples block T down to 1.  Returns a list of T block vectors
    (or (size, M) matrices when size is given).
    """
    T, M = q.T, q.M
    lams = []
    w = []  # Lambda_t^-1 Q_{t,t+1}
    mus = []
    for t in range(T):
        prec = q.diag_blocks[t]
        rhs = np.asarray(m_blocks[t], dtype=float)
        if t > 0:
            prec = prec - w[t - 1].T @ w[t - 1]
            rhs = rhs - q.offdiag_blocks[t - 1].T @ mus[t - 1]
        lam = cholesky(prec)
        lams.append(lam)
        if t < T - 1:
            w.append(scipy.linalg.solve_triangular(
                lam, q.offdiag_blocks[t], lower=True, check_finite=False))
        half = scipy.linalg.solve_triangular(lam, rhs, lower=True, check_finite=False)
        mus.append(scipy.linalg.solve_triangular(
            lam.T, half, lower=False, check_finite=False))
    out = [None] * T
    prev = None
    for t in range(T - 1, -1, -1):
        shape = (M, size) if size is not None else (M,)
        eps = rng.generator.standard_normal(shape) if noise else np.zeros(shape)
        inner = eps if t == T - 1 else eps - w[t] @ prev
        delta = scipy.linalg.solve_triangular(lams[t].T, inner, lower=False,
                                              check_finite=False)
        prev = (mus[t][:, None] if size is not None else mus[t]) + delta
        out[t] = prev.T if size is not None else prev
    return out


def mvn_logpdf_from_cov_chol(x, mean, cov_chol) -> float:
    """Gaussian log density given the covariance Cholesky factor."""
    x = np.asarray(x, dtype=float)
    d = x.size
    z = scipy.linalg.solve_triangular(cov_chol, x - mean, lower=True, check_finite=False)
    return -0.5 * (d * np.log(2.0 * np.pi) + chol_logdet(cov_chol) + float(z @ z))
