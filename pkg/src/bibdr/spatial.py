"""Spatial correlation, knot selection, and the low-rank process projector.

The latent fields live on M knot locations; per-period site values are the
kriging conditional expectation, i.e. rows of D_t = c_t^T C^-1 where c_t is
the knot-to-site correlation matrix and C the knot correlation matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import linalg
from .errors import InvalidRange, NotPositiveDefinite, TooManyKnots
from .rng import RngStream


def exp_correlation(d, phi):
    """Exponential kernel exp(-d / phi)."""
    if phi <= 0:
        raise InvalidRange(f"range must be positive, got {phi}")
    return np.exp(-np.asarray(d, dtype=float) / phi)


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.sqrt(np.maximum(
        ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1), 0.0))


def knot_covariance(knots: np.ndarray, phi: float) -> np.ndarray:
    """M x M correlation matrix of the knot set (unit diagonal, SPD)."""
    knots = np.asarray(knots, dtype=float)
    c = exp_correlation(pairwise_distances(knots, knots), phi)
    np.fill_diagonal(c, 1.0)
    return c


def select_knots(sites: np.ndarray, m: int, rng: RngStream,
                 n_restarts: int = 50, max_iter: int = 300) -> np.ndarray:
    """M cluster centroids of Lloyd's algorithm over the pooled site list.

    k-means++ seeding, best within-cluster sum of squares over restarts,
    convergence when assignments stabilize.
    """
    sites = np.asarray(sites, dtype=float)
    distinct = np.unique(sites, axis=0)
    if m > distinct.shape[0]:
        raise TooManyKnots(f"{m} knots requested, {distinct.shape[0]} distinct sites")
    if m == distinct.shape[0]:
        return distinct.copy()
    gen = rng.generator
    best_wcss = np.inf
    best = None
    for _ in range(n_restarts):
        centers = _kmeans_pp_init(sites, m, gen)
        labels = None
        for _ in range(max_iter):
            d2 = ((sites[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
            new_labels = d2.argmin(1)
            if labels is not None and np.array_equal(new_labels, labels):
                break
            labels = new_labels
            for j in range(m):
                mask = labels == j
                if mask.any():
                    centers[j] = sites[mask].mean(0)
        wcss = float(((sites - centers[labels]) ** 2).sum())
        if wcss < best_wcss:
            best_wcss = wcss
            best = centers.copy()
    return best


def _kmeans_pp_init(sites, m, gen):
    n = sites.shape[0]
    centers = np.empty((m, sites.shape[1]))
    centers[0] = sites[gen.integers(n)]
    d2 = ((sites - centers[0]) ** 2).sum(1)
    for j in range(1, m):
        total = d2.sum()
        if total <= 0:
            centers[j] = sites[gen.integers(n)]
        else:
            centers[j] = sites[np.searchsorted(np.cumsum(d2 / total),
                                               gen.random()).clip(0, n - 1)]
        d2 = np.minimum(d2, ((sites - centers[j]) ** 2).sum(1))
    return centers


@dataclass
class GppProjector:
    """Per-period projection of knot values onto observation sites.

    rows: stacked (N, M) matrix whose i-th row is the kriging weight vector
    of observation i against its own period's sites; c_chol is the Cholesky
    factor of the knot correlation matrix at range phi.
    """

    knots: np.ndarray
    phi: float
    c: np.ndarray
    c_chol: np.ndarray
    rows: np.ndarray
    period_slices: list = field(default_factory=list)

    def project(self, knot_values_by_period: np.ndarray, period_idx: np.ndarray) -> np.ndarray:
        """Site-level field values: row i dotted with its period's knot vector."""
        return np.einsum("nm,nm->n", self.rows, knot_values_by_period[period_idx])


def build_projector(sites_by_period, knots, phi) -> GppProjector:
    """Assemble the projector for every period at range phi."""
    knots = np.asarray(knots, dtype=float)
    c = knot_covariance(knots, phi)
    c_chol = linalg.cholesky(c)
    blocks = []
    slices = []
    offset = 0
    for sites in sites_by_period:
        sites = np.asarray(sites, dtype=float)
        corr = exp_correlation(pairwise_distances(sites, knots), phi)  # (N_t, M)
        d_t = scipy.linalg.cho_solve((c_chol, True), corr.T, check_finite=False).T
        blocks.append(d_t)
        slices.append(slice(offset, offset + sites.shape[0]))
        offset += sites.shape[0]
    rows = np.vstack(blocks) if blocks else np.zeros((0, knots.shape[0]))
    return GppProjector(knots=knots, phi=float(phi), c=c, c_chol=c_chol,
                        rows=rows, period_slices=slices)
