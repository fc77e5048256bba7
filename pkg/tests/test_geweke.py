"""Successive-conditional (joint-distribution) test of the full sampler."""

import numpy as np

from bibdr.mcmc import geweke_check


def test_geweke_clean_sampler():
    report = geweke_check(n_cycles=3000, seed=0)
    zmax = max(abs(z) for z in report.values())
    assert zmax < 4.0, report


def test_geweke_detects_corruption():
    report = geweke_check(n_cycles=3000, seed=0, corrupt=True)
    assert max(abs(z) for z in report.values()) > 6.0


def test_geweke_reproducible():
    r1 = geweke_check(n_cycles=300, seed=4)
    r2 = geweke_check(n_cycles=300, seed=4)
    assert r1 == r2
