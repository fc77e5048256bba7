"""Block-tridiagonal samplers vs a dense oracle; random-walk identities."""

import numpy as np
import pytest
import scipy.linalg

from bibdr import linalg
from bibdr.errors import NotPositiveDefinite
from bibdr.rng import RngStream


def _random_system(gen, M, T, scale=1.0):
    diag, off = [], []
    for t in range(T):
        a = gen.standard_normal((M, M))
        diag.append(a @ a.T + (M + 2) * np.eye(M))
        if t < T - 1:
            off.append(scale * gen.standard_normal((M, M)))
    q = linalg.BlockTridiagonalPrecision(diag, off)
    m = gen.standard_normal(M * T)
    return m, q


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        linalg.cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_cholesky_jitter():
    a = np.array([[1.0, 1.0], [1.0, 1.0]])
    lower = linalg.cholesky(a, jitter=1e-6)
    assert np.allclose(lower @ lower.T, a + 1e-6 * np.eye(2))


def test_block_precision_to_dense_round_trip():
    gen = np.random.default_rng(0)
    m, q = _random_system(gen, 3, 4)
    dense = q.to_dense()
    assert np.allclose(dense, dense.T)
    assert np.allclose(dense[:3, 3:6], q.offdiag_blocks[0])
    assert np.allclose(dense[3:6, :3], q.offdiag_blocks[0].T)
    assert np.abs(dense[:3, 6:]).max() == 0.0


def test_solve_means_match_dense_oracle():
    # 50 random systems with MT <= 8; both samplers' noise-free solves
    gen = np.random.default_rng(1)
    rng = RngStream(1, 2)
    worst = 0.0
    for _ in range(50):
        M = int(gen.integers(1, 5))
        T = int(gen.integers(2, max(3, 8 // M + 1)))
        m, q = _random_system(gen, M, T, scale=0.4)
        dense_mean = np.linalg.solve(q.to_dense(), m)
        x_rue = linalg.sample_rue(m, q, rng, noise=False)
        x_mcc = np.concatenate(
            linalg.sample_mccausland(m.reshape(T, M), q, rng, noise=False))
        worst = max(worst, np.abs(x_rue - dense_mean).max(),
                    np.abs(x_mcc - dense_mean).max())
    assert worst < 1e-8


def test_sampler_covariances_match_dense_oracle():
    gen = np.random.default_rng(2)
    rng = RngStream(2, 3)
    n = 100_000
    for trial in range(3):
        M = [2, 3, 1][trial]
        T = [3, 2, 6][trial]
        m, q = _random_system(gen, M, T, scale=0.4)
        cov = np.linalg.inv(q.to_dense())
        xr = linalg.sample_rue(m, q, rng, size=n)
        xm = np.hstack(linalg.sample_mccausland(m.reshape(T, M), q, rng, size=n))
        for x in (xr, xm):
            assert x.shape == (n, M * T)
            emp = np.cov(x.T) if M * T > 1 else np.atleast_2d(np.var(x))
            assert np.abs(emp - cov).max() < 2e-2
            assert np.abs(x.mean(axis=0) - np.linalg.solve(q.to_dense(), m)).max() < 2e-2


def test_random_walk_precision_det_identity():
    # |Q| = |tau C^-1|^T for the random-walk precision (unit-triangular H)
    gen = np.random.default_rng(3)
    M, T, tau = 3, 4, 1.7
    a = gen.standard_normal((M, M))
    c_inv = a @ a.T + M * np.eye(M)
    q = linalg.random_walk_precision(c_inv, tau, T).to_dense()
    sign, logdet = np.linalg.slogdet(q)
    assert sign > 0
    assert logdet == pytest.approx(T * np.linalg.slogdet(tau * c_inv)[1])


def test_joint_density_equals_sequential_conditionals():
    # the joint of (f_1..f_T) | f_0 under the random walk, expressed with
    # the block-tridiagonal precision, must equal the product of the
    # sequential transition densities
    gen = np.random.default_rng(4)
    M, T, tau = 2, 4, 0.8
    a = gen.standard_normal((M, M))
    c = a @ a.T + M * np.eye(M)
    c_chol = linalg.cholesky(c)
    c_inv = np.linalg.inv(c)
    q = linalg.random_walk_precision(c_inv, tau, T).to_dense()
    cov_chol = np.linalg.cholesky(np.linalg.inv(q))
    worst = 0.0
    for _ in range(50):
        f0 = gen.standard_normal(M)
        f = gen.standard_normal((T, M))
        joint = linalg.mvn_logpdf_from_cov_chol(
            f.ravel(), np.tile(f0, T), cov_chol)
        seq = 0.0
        prev = f0
        for t in range(T):
            seq += linalg.mvn_logpdf_from_cov_chol(
                f[t], prev, c_chol / np.sqrt(tau))
            prev = f[t]
        worst = max(worst, abs(joint - seq))
    assert worst < 1e-8


def test_h_transform_inverse_pair():
    gen = np.random.default_rng(5)
    f = gen.standard_normal((5, 3))
    diffs = linalg.h_forward_difference(f.ravel(), 3).reshape(5, 3)
    assert np.allclose(diffs[0], f[0])
    assert np.allclose(diffs[1:], f[1:] - f[:-1])
    stacked = linalg.h_inverse_stack(f[0], 4)
    assert np.allclose(stacked.reshape(4, 3), np.tile(f[0], (4, 1)))
