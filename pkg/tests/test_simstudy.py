"""Generator-vs-truth consistency and the study metrics."""

import numpy as np
import pytest

from bibdr.errors import ConfigError, DimensionMismatch
from bibdr.mcmc import ChainConfig
from bibdr.rng import RngStream
from bibdr.simstudy import (ScenarioSpec, compute_cp_al, compute_mse,
                            generate_replication, mixture_parameters,
                            run_study, true_cdf)


def test_scenario_spec_validation():
    with pytest.raises(ConfigError):
        ScenarioSpec(scenario=3)
    with pytest.raises(ConfigError):
        ScenarioSpec(upper_tail_width=0.0)


def test_softmax_reference_point():
    # at x=0 with zero spatial/time effects: softmax of (-1, -1.5, 0)
    lam0, lam1, mu, sigma = mixture_parameters(
        np.array([0.0]), np.array([0.0]), 0.0, np.array([0.0]), 1, 10)
    # cancel the spatial/time effects at s=(0,0), t=0 for scenario 1:
    # zeta0=0, zeta1=1, zeta2=1, iota0=0, iota1=-1/2, iota2=0
    e = np.exp([-1.0 + 0.0, -1.5 + 1.0 - 0.5, 0.0])
    assert lam0[0] == pytest.approx(e[0] / e.sum())
    assert lam1[0] == pytest.approx(e[1] / e.sum())
    assert mu[0] == pytest.approx(1.0 + 1.0 + 0.0)


def test_truth_monotone_in_threshold():
    spec = ScenarioSpec(scenario=2, T=4, sites_per_period=10)
    _, truth = generate_replication(spec, RngStream(1, 9))
    assert (np.diff(truth.values, axis=0) >= 0).all()
    assert (truth.values >= 0).all() and (truth.values <= 1).all()


def test_generator_matches_truth_large_n():
    # empirical CDF at each threshold within 4 sqrt(F(1-F)/n) of the
    # analytic truth for a forced huge n
    spec = ScenarioSpec(scenario=1, T=1, sites_per_period=3,
                        n_lo=100_000, n_hi=100_001)
    samples, truth = generate_replication(spec, RngStream(2, 5))
    for i, s in enumerate(samples):
        n = s.responses.size
        for k, a in enumerate(spec.thresholds):
            emp = np.mean(s.responses <= a)
            f = truth.values[k, i]
            assert abs(emp - f) <= 4.0 * np.sqrt(f * (1.0 - f) / n) + 1e-12


def test_responses_positive_and_finite():
    spec = ScenarioSpec(scenario=1, T=2, sites_per_period=4)
    samples, _ = generate_replication(spec, RngStream(3, 5))
    for s in samples:
        assert np.isfinite(s.responses).all()
        assert (s.responses > 0).all()
        assert s.responses.size >= 50


def test_scenarios_share_smooth_terms():
    s1 = np.array([0.3, -0.4])
    s2 = np.array([-0.5, -0.7])  # both s2 < 0 and s1+s2 < 0
    x = np.zeros(2)
    _, _, mu_1, _ = mixture_parameters(s1, s2, 2.0, x, 1, 10)
    _, _, mu_2, _ = mixture_parameters(s1, s2, 2.0, x, 2, 10)
    # with s2 < 0 the scenario-2 indicators vanish, so the two scenarios
    # differ in mu only through the linear-vs-indicator zeta2 term
    assert np.allclose(mu_2 - mu_1, -1.0 - (s1 + s2))


def test_true_cdf_closed_form():
    f = true_cdf(0.2, 0.3, 1.0, 0.5, np.e)  # log a = 1 = mu -> Phi(0) = 1/2
    assert f == pytest.approx(0.3 + 0.5 * 0.5)


def test_compute_mse_examples():
    est = np.full(10, 0.4)
    assert compute_mse(est, est) == 0.0
    assert compute_mse(est + 0.1, est) == pytest.approx(0.01)
    with pytest.raises(DimensionMismatch):
        compute_mse(est, est[:5])


def test_compute_mse_matches_double_loop():
    gen = np.random.default_rng(4)
    a, b = gen.uniform(0, 1, 30), gen.uniform(0, 1, 30)
    naive = sum((x - y) ** 2 for x, y in zip(a, b)) / 30
    assert compute_mse(a, b) == pytest.approx(naive, abs=1e-12)


def test_compute_cp_al_examples():
    truth = [np.array([0.5, 0.5])]
    cp, al = compute_cp_al([np.zeros(2)], [np.ones(2)], truth)
    assert cp == 100.0 and al == 1.0
    cp, al = compute_cp_al([np.array([0.5, 0.6])], [np.array([0.5, 0.7])], truth)
    assert cp == 50.0
    cp, al = compute_cp_al([truth[0]], [truth[0]], truth)
    assert cp == 100.0 and al == 0.0


def test_compute_cp_al_accumulation_associative():
    gen = np.random.default_rng(5)
    los = [gen.uniform(0, 0.4, 8) for _ in range(3)]
    his = [lo + gen.uniform(0, 0.5, 8) for lo in los]
    trs = [gen.uniform(0, 1, 8) for _ in range(3)]
    cp_all, al_all = compute_cp_al(los, his, trs)
    cp_cat, al_cat = compute_cp_al([np.concatenate(los)], [np.concatenate(his)],
                                   [np.concatenate(trs)])
    assert cp_all == pytest.approx(cp_cat)
    assert al_all == pytest.approx(al_cat)


def test_run_study_smoke_and_determinism():
    spec = ScenarioSpec(scenario=1, T=2, sites_per_period=5,
                        thresholds=(1.0, 4.0))
    cfg = ChainConfig(iterations=80, burn_in=30, M=3)
    t1 = run_study(spec, methods=("BIB",), R=1, seed=9, chain_config=cfg)
    t2 = run_study(spec, methods=("BIB",), R=1, seed=9, chain_config=cfg)
    np.testing.assert_array_equal(t1.raw_mse["BIB"], t2.raw_mse["BIB"])
    # R=1: the replication band collapses onto the single value
    np.testing.assert_allclose(t1.mse_lo["BIB"], t1.mse_mean["BIB"])
    np.testing.assert_allclose(t1.mse_hi["BIB"], t1.mse_mean["BIB"])
    assert (t1.cp["BIB"] >= 0).all() and (t1.cp["BIB"] <= 100).all()
    assert (t1.al["BIB"] >= 0).all()
