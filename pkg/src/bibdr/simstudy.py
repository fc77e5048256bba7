"""Simulation-study harness: generator, metrics, and the replication driver.

The latent continuous response is a three-component mixture: a uniform
above the largest threshold (structural zeros of the binned counts), a
uniform below the smallest threshold (structural full counts), and a
log-normal body.  Truth values of the conditional CDF at each threshold
are available in closed form, so estimator error is exact.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr

from .dr import MicroSample, ThresholdGrid, bin_counts, fit_rstdr
from .errors import ConfigError, DimensionMismatch
from .mcmc import ChainConfig
from .rng import RngStream

DEFAULT_THRESHOLDS = (1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 14.0)


@dataclass
class ScenarioSpec:
    scenario: int = 1
    T: int = 10
    sites_per_period: int = 50
    n_lo: float = 50.0
    n_hi: float = 100.0
    thresholds: tuple = DEFAULT_THRESHOLDS
    upper_tail_width: float = 1.0   # immaterial to CDF values at the thresholds

    def __post_init__(self):
        if self.scenario not in (1, 2):
            raise ConfigError(f"scenario must be 1 or 2, got {self.scenario}")
        if self.upper_tail_width <= 0:
            raise ConfigError("upper tail width must be positive")

    @property
    def K(self) -> int:
        return len(self.thresholds)


@dataclass
class TruthSurface:
    thresholds: np.ndarray  # (K,)
    period: np.ndarray      # (N,)
    values: np.ndarray      # (K, N), exact CDF values


def _spatial_effects(s1, s2, scenario):
    if scenario == 1:
        z0 = np.sin(s1)
        z1 = np.cos(s1)
        z2 = np.exp(-2.0 * s1**2 - 2.0 * s2**2) + s1 + s2
    else:
        z0 = np.sin(s1) - 0.5 * (s2 > 0)
        z1 = np.cos(s1) - 0.5 * (s2 > 0)
        z2 = np.exp(-2.0 * s1**2 - 2.0 * s2**2) + 2.0 * (s1 + s2 > 0) - 1.0
    return z0, z1, z2


def _time_effects(t, T):
    # t is 1-based here
    i0 = 0.5 * np.sin(np.pi * t / 2.0)
    i1 = -0.5 * np.cos(np.pi * t / 2.0)
    i2 = 1.5 * t / T
    return i0, i1, i2


def mixture_parameters(s1, s2, t, x, scenario, T):
    """Component weights (lam0, lam1) and log-normal (mu, sigma) per cell."""
    z0, z1, z2 = _spatial_effects(s1, s2, scenario)
    i0, i1, i2 = _time_effects(t, T)
    nu0 = -1.0 + 0.5 * x + z0 + i0
    nu1 = -1.5 - x + z1 + i1
    # softmax over (nu0, nu1, 0)
    m = np.maximum(np.maximum(nu0, nu1), 0.0)
    e0, e1, e2 = np.exp(nu0 - m), np.exp(nu1 - m), np.exp(-m)
    denom = e0 + e1 + e2
    lam0, lam1 = e0 / denom, e1 / denom
    mu = 1.0 + x + z2 + i2
    sigma = np.exp(-1.5 + 0.2 * x + 0.5 * z2 + 0.5 * i2)
    return lam0, lam1, mu, sigma


def true_cdf(lam0, lam1, mu, sigma, a):
    """Exact mixture CDF at threshold a (inside the log-normal body's range).

    The upper uniform component lies entirely above the largest threshold
    (contributes 0); the lower one entirely below the smallest
    (contributes 1).
    """
    return lam1 + (1.0 - lam0 - lam1) * ndtr((math.log(a) - mu) / sigma)


def generate_replication(spec: ScenarioSpec, rng: RngStream):
    """One replication: micro samples plus the exact truth surface."""
    gen = rng.generator
    samples = []
    a1 = spec.thresholds[0]
    aK = spec.thresholds[-1]
    lam0_all, lam1_all, mu_all, sig_all = [], [], [], []
    periods = []
    for t in range(1, spec.T + 1):
        coords = gen.uniform(-1.0, 1.0, size=(spec.sites_per_period, 2))
        x = gen.normal(0.0, 0.5, size=spec.sites_per_period)
        n = np.floor(gen.uniform(spec.n_lo, spec.n_hi,
                                 size=spec.sites_per_period)).astype(np.int64)
        n = np.maximum(n, 1)
        lam0, lam1, mu, sigma = mixture_parameters(
            coords[:, 0], coords[:, 1], float(t), x, spec.scenario, spec.T)
        for i in range(spec.sites_per_period):
            comp = gen.choice(3, size=n[i],
                              p=[lam0[i], lam1[i], 1.0 - lam0[i] - lam1[i]])
            z = np.empty(n[i])
            upper = comp == 0
            lower = comp == 1
            body = comp == 2
            z[upper] = gen.uniform(aK, aK + spec.upper_tail_width, size=upper.sum())
            z[lower] = gen.uniform(0.0, a1, size=lower.sum())
            z[body] = np.exp(mu[i] + sigma[i] * gen.standard_normal(body.sum()))
            samples.append(MicroSample(period=t - 1, coords=coords[i],
                                       x=np.array([1.0, x[i]]), responses=z))
        lam0_all.append(lam0)
        lam1_all.append(lam1)
        mu_all.append(mu)
        sig_all.append(sigma)
        periods.append(np.full(spec.sites_per_period, t - 1))
    lam0 = np.concatenate(lam0_all)
    lam1 = np.concatenate(lam1_all)
    mu = np.concatenate(mu_all)
    sigma = np.concatenate(sig_all)
    values = np.stack([true_cdf(lam0, lam1, mu, sigma, a)
                       for a in spec.thresholds])
    truth = TruthSurface(thresholds=np.asarray(spec.thresholds, dtype=float),
                         period=np.concatenate(periods), values=values)
    return samples, truth


# ----------------------------------------------------------------------
# metrics
# ----------------------------------------------------------------------

def compute_mse(est_means: np.ndarray, truth_values: np.ndarray) -> float:
    """Mean squared error over all observations at one threshold."""
    est_means = np.asarray(est_means, dtype=float)
    truth_values = np.asarray(truth_values, dtype=float)
    if est_means.shape != truth_values.shape:
        raise DimensionMismatch("estimate/truth shapes disagree")
    return float(np.mean((est_means - truth_values) ** 2))


def compute_cp_al(lo_list, hi_list, truth_list):
    """Coverage percent and average interval length over replications."""
    covered = 0
    total = 0
    length = 0.0
    for lo, hi, tr in zip(lo_list, hi_list, truth_list):
        lo, hi, tr = (np.asarray(a, dtype=float) for a in (lo, hi, tr))
        if lo.shape != tr.shape or hi.shape != tr.shape:
            raise DimensionMismatch("interval/truth shapes disagree")
        covered += int(np.sum((tr >= lo) & (tr <= hi)))
        length += float(np.sum(hi - lo))
        total += tr.size
    return 100.0 * covered / total, length / total


@dataclass
class MetricsTable:
    """Per-(method, threshold) summaries of a replication study."""

    thresholds: np.ndarray
    mse_mean: dict       # method -> (K,)
    mse_lo: dict
    mse_hi: dict
    cp: dict             # percent
    al: dict
    raw_mse: dict        # method -> (R, K)
    failures: int = 0


# ----------------------------------------------------------------------
# replication driver
# ----------------------------------------------------------------------

#: stream-id bands: data generation vs chain fits
_DATA_STREAM_BASE = 10_000_000
_FIT_STREAM_BASE = 20_000_000


def _replication_task(args):
    (spec, method, rep, seed, chain_config) = args
    data_rng = RngStream(seed, _DATA_STREAM_BASE + spec.scenario * 1000 + rep)
    samples, truth = generate_replication(spec, data_rng)
    grid = ThresholdGrid(np.asarray(spec.thresholds))
    datasets = bin_counts(samples, grid)
    stream = _FIT_STREAM_BASE + ((spec.scenario * 1000 + rep) * 4
                                 + (0 if method == "BIB" else 1)) * 100_000
    config = replace(chain_config, model=method, seed=seed, stream_id=stream)
    surface = fit_rstdr(datasets, None, config, thresholds=spec.thresholds)
    mse = np.array([compute_mse(surface.mean[k], truth.values[k])
                    for k in range(grid.K)])
    return rep, method, mse, surface.lo, surface.hi, truth.values


def run_study(spec: ScenarioSpec, methods=("BIB", "BN"), R: int = 20,
              jobs: int = 1, seed: int = 0,
              chain_config: ChainConfig | None = None) -> MetricsTable:
    """R replications of the scenario for each method, reduced to metrics."""
    if R < 1:
        raise ConfigError("R must be >= 1")
    if chain_config is None:
        chain_config = ChainConfig()
    tasks = [(spec, method, rep, seed, chain_config)
             for rep in range(R) for method in methods]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = []
            failures = 0
            for res in pool.map(_replication_task, tasks):
                results.append(res)
    else:
        results = [_replication_task(t) for t in tasks]
    failures = 0

    K = spec.K
    raw_mse = {m: np.full((R, K), np.nan) for m in methods}
    lo_acc = {m: [] for m in methods}
    hi_acc = {m: [] for m in methods}
    tr_acc = {m: [] for m in methods}
    for rep, method, mse, lo, hi, truth_values in results:
        raw_mse[method][rep] = mse
        lo_acc[method].append(lo)
        hi_acc[method].append(hi)
        tr_acc[method].append(truth_values)

    thresholds = np.asarray(spec.thresholds, dtype=float)
    mse_mean, mse_lo, mse_hi, cp, al = {}, {}, {}, {}, {}
    for m in methods:
        mse_mean[m] = raw_mse[m].mean(axis=0)
        mse_lo[m] = np.quantile(raw_mse[m], 0.025, axis=0)
        mse_hi[m] = np.quantile(raw_mse[m], 0.975, axis=0)
        cp_k = np.empty(K)
        al_k = np.empty(K)
        for k in range(K):
            cp_k[k], al_k[k] = compute_cp_al(
                [lo[k] for lo in lo_acc[m]], [hi[k] for hi in hi_acc[m]],
                [tr[k] for tr in tr_acc[m]])
        cp[m] = cp_k
        al[m] = al_k
    return MetricsTable(thresholds=thresholds, mse_mean=mse_mean, mse_lo=mse_lo,
                        mse_hi=mse_hi, cp=cp, al=al, raw_mse=raw_mse,
                        failures=failures)
