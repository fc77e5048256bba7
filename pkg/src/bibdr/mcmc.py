"""Metropolis-within-Gibbs sampler for the boundary-inflated binomial model.

The observation model is a three-component mixture: point masses at 0 and
n_it plus a binomial component, with logit-linear success probability and
multinomial-logit mixing weights.  Spatio-temporal heterogeneity enters
both linear predictors through low-rank latent fields driven by a knot-level
Gaussian random walk.  Every conditional is conjugate after Polya-Gamma
augmentation except the spatial range parameters, which take random-walk
Metropolis steps on a logit-transformed scale.

The plain binomial variant ("BN") runs the identical machinery with the
inflation components disabled: all observations are treated as binomial
draws and the mixing block is never updated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import expit, gammaln

from . import linalg, spatial
from .errors import ConfigError, DimensionMismatch
from .pg import draw_pg_vector
from .rng import RngStream


# ----------------------------------------------------------------------
# data containers
# ----------------------------------------------------------------------

@dataclass
class PanelDataset:
    """Per-period binomial observations with varying sites per period.

    Arrays are stacked over periods in period order; ``period`` holds the
    0-based period index of each row.
    """

    T: int
    period: np.ndarray   # (N,) int
    coords: np.ndarray   # (N, 2)
    x: np.ndarray        # (N, q)
    n: np.ndarray        # (N,) int
    y: np.ndarray        # (N,) int

    def __post_init__(self):
        self.period = np.asarray(self.period, dtype=np.int64)
        self.coords = np.asarray(self.coords, dtype=float)
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.n = np.asarray(self.n, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.int64)
        N = self.period.size
        if not (self.coords.shape[0] == self.x.shape[0] == self.n.size == self.y.size == N):
            raise DimensionMismatch("observation arrays disagree in length")
        if np.any(np.diff(self.period) < 0):
            order = np.argsort(self.period, kind="stable")
            for name in ("period", "coords", "x", "n", "y"):
                setattr(self, name, getattr(self, name)[order])
        if np.any(self.y < 0) or np.any(self.y > self.n) or np.any(self.n < 1):
            raise DimensionMismatch("counts must satisfy 0 <= y <= n, n >= 1")

    @property
    def N(self) -> int:
        return self.period.size

    @property
    def q(self) -> int:
        return self.x.shape[1]

    def sites_by_period(self) -> list:
        return [self.coords[self.period == t] for t in range(self.T)]

    def period_masks(self) -> list:
        return [self.period == t for t in range(self.T)]


@dataclass
class Priors:
    b0: np.ndarray
    B0: np.ndarray
    g0: list            # two q-vectors
    G0: list            # two q x q precisions
    a_u: float
    b_u: float
    a_xi: list          # two (shape, rate) pairs share layout: [a0, a1]
    b_xi: list
    phi_lo: float
    phi_hi: float


def default_priors(data: PanelDataset) -> Priors:
    """Weakly informative defaults; range prior spans the site geometry."""
    q = data.q
    dmax = float(spatial.pairwise_distances(data.coords, data.coords).max())
    if dmax <= 0:
        dmax = 1.0
    return Priors(
        b0=np.zeros(q), B0=0.01 * np.eye(q),
        g0=[np.zeros(q), np.zeros(q)], G0=[0.01 * np.eye(q), 0.01 * np.eye(q)],
        a_u=1.0, b_u=1.0, a_xi=[1.0, 1.0], b_xi=[1.0, 1.0],
        phi_lo=0.05 * dmax, phi_hi=2.0 * dmax,
    )


@dataclass
class ChainConfig:
    iterations: int = 3000
    burn_in: int = 1000
    thin: int = 1
    model: str = "BIB"            # BIB or BN
    smoother: str = "mccausland"  # or "rue"
    M: int = 25
    seed: int = 0
    stream_id: int = 0
    phi_step: float = 0.3
    adapt_phi: bool = True        # Robbins-Monro toward 0.44 during burn-in only
    skip_unused_pg: bool = False  # skip binomial-part PG draws for r != 2 rows
    pg_approx_above: int | None = None
    knots: np.ndarray | None = None

    def validate(self):
        if self.model not in ("BIB", "BN"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.smoother not in ("mccausland", "rue"):
            raise ConfigError(f"unknown smoother {self.smoother!r}")
        if self.iterations <= self.burn_in:
            raise ConfigError("iterations must exceed burn_in")
        if self.thin < 1 or self.M < 1:
            raise ConfigError("thin and M must be >= 1")


@dataclass
class ChainState:
    beta: np.ndarray        # (q,)
    gamma: np.ndarray       # (2, q)
    u_bar: np.ndarray       # (T, M)
    u_bar0: np.ndarray      # (M,)
    xi_bar: np.ndarray      # (2, T, M)
    xi_bar0: np.ndarray     # (2, M)
    tau_u: float
    tau_xi: np.ndarray      # (2,)
    phi_u: float
    phi_xi: np.ndarray      # (2,)
    r: np.ndarray           # (N,) in {0,1,2}
    omega: np.ndarray       # (N,)
    omega_k: np.ndarray     # (2, N)


@dataclass
class PosteriorDraws:
    """Retained post-burn-in draws; columns labeled via ``params`` keys."""

    params: dict                  # name -> (n_draws, dim) array
    pi: np.ndarray                # (n_draws, N)
    p0: np.ndarray
    p1: np.ndarray
    cdf: np.ndarray               # mixture CDF draws F_it
    model: str
    accept_phi: dict = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return self.cdf.shape[0]


# ----------------------------------------------------------------------
# sampler
# ----------------------------------------------------------------------

def _log1pexp(x):
    return np.logaddexp(0.0, x)


class GibbsSampler:
    """One chain of the boundary-inflated (or plain) binomial model."""

    def __init__(self, data: PanelDataset, priors: Priors, config: ChainConfig,
                 rng: RngStream):
        config.validate()
        self.data = data
        self.priors = priors
        self.config = config
        self.rng = rng
        self.inflated = config.model == "BIB"

        if config.knots is not None:
            self.knots = np.asarray(config.knots, dtype=float)
        else:
            self.knots = spatial.select_knots(data.coords, config.M,
                                              rng.child(rng.stream_id + 104729))
        self.M = self.knots.shape[0]
        self.sites_by_period = data.sites_by_period()
        self.period_masks = data.period_masks()
        self.kappa = data.y - data.n / 2.0
        self.log_binom_coef = (gammaln(data.n + 1) - gammaln(data.y + 1)
                               - gammaln(data.n - data.y + 1))
        self.is_zero = data.y == 0
        self.is_full = data.y == data.n

        self.state = self._init_state()
        self.proj_u = spatial.build_projector(self.sites_by_period, self.knots,
                                              self.state.phi_u)
        self.proj_xi = [spatial.build_projector(self.sites_by_period, self.knots,
                                                self.state.phi_xi[k])
                        for k in range(2)]
        self._phi_accept = {"u": 0, "xi0": 0, "xi1": 0}
        self._phi_tries = {"u": 0, "xi0": 0, "xi1": 0}
        self._phi_step = {"u": config.phi_step, "xi0": config.phi_step,
                          "xi1": config.phi_step}
        self._kappa_bias = 0.0  # test hook for the correctness harness
        self._refresh_binomial_part()
        self._refresh_mixture_part()

    def set_counts(self, y: np.ndarray, r: np.ndarray | None = None):
        """Swap in new counts (used by the successive-conditional harness)."""
        d = self.data
        d.y = np.asarray(y, dtype=np.int64)
        self.kappa = d.y - d.n / 2.0
        self.log_binom_coef = (gammaln(d.n + 1) - gammaln(d.y + 1)
                               - gammaln(d.n - d.y + 1))
        self.is_zero = d.y == 0
        self.is_full = d.y == d.n
        if r is not None:
            self.state.r = np.asarray(r, dtype=np.int64)
        self._refresh_binomial_part()

    # -- state helpers ---------------------------------------------------

    def _init_state(self) -> ChainState:
        d, cfg = self.data, self.config
        T, M, q, N = d.T, self.M, d.q, d.N
        pr = self.priors
        r = np.full(N, 2, dtype=np.int64)
        if self.inflated:
            # boundary rows start uniformly over their feasible classes
            u = self.rng.generator.random(N)
            r[self.is_zero & (u < 0.5)] = 0
            r[self.is_full & (u < 0.5)] = 1
        phi_mid = 0.5 * (pr.phi_lo + pr.phi_hi)
        return ChainState(
            beta=np.zeros(q), gamma=np.zeros((2, q)),
            u_bar=np.zeros((T, M)), u_bar0=np.zeros(M),
            xi_bar=np.zeros((2, T, M)), xi_bar0=np.zeros((2, M)),
            tau_u=1.0, tau_xi=np.ones(2),
            phi_u=phi_mid, phi_xi=np.array([phi_mid, phi_mid]),
            r=r, omega=np.ones(N), omega_k=np.ones((2, N)),
        )

    def _refresh_binomial_part(self):
        s, d = self.state, self.data
        self.u = self.proj_u.project(s.u_bar, d.period)
        self.eta = d.x @ s.beta + self.u
        self.pi = expit(self.eta)
        self.log_bin = (self.log_binom_coef + d.y * self.eta
                        - d.n * _log1pexp(self.eta))

    def _refresh_mixture_part(self):
        s, d = self.state, self.data
        self.xi = np.stack([self.proj_xi[k].project(s.xi_bar[k], d.period)
                            for k in range(2)])
        self.psi = np.stack([d.x @ s.gamma[k] + self.xi[k] for k in range(2)])
        lse = _log1pexp(np.logaddexp(self.psi[0], self.psi[1]))
        self.log_p = self.psi - lse
        self.log_p2 = -lse  # log(1 - p0 - p1)

    # -- step 1 ----------------------------------------------------------

    def sample_indicators(self):
        s = self.state
        gen = self.rng.generator
        r = np.full(self.data.N, 2, dtype=np.int64)
        for k, mask in ((0, self.is_zero), (1, self.is_full)):
            if not mask.any():
                continue
            p_boundary = expit(self.psi[k][mask] - self.log_bin[mask])
            take = gen.random(mask.sum()) < p_boundary
            idx = np.where(mask)[0][take]
            r[idx] = k
        s.r = r

    # -- step 2: binomial part -------------------------------------------

    def sample_pg_binomial(self):
        s, d = self.state, self.data
        if self.config.skip_unused_pg and self.inflated:
            star = s.r == 2
            s.omega[star] = draw_pg_vector(d.n[star], self.eta[star], self.rng,
                                           self.config.pg_approx_above)
        else:
            s.omega = draw_pg_vector(d.n, self.eta, self.rng,
                                     self.config.pg_approx_above)

    def sample_beta(self):
        s, d, pr = self.state, self.data, self.priors
        star = s.r == 2
        b = pr.B0 @ pr.b0
        B = pr.B0.copy()
        if star.any():
            xs = d.x[star]
            om = s.omega[star]
            resid = self.kappa[star] + self._kappa_bias - om * self.u[star]
            b = b + xs.T @ resid
            B = B + xs.T @ (om[:, None] * xs)
        s.beta = self._draw_gaussian(b, B)
        self._refresh_binomial_part()

    def _draw_gaussian(self, b, B):
        lower = linalg.cholesky(B)
        half = scipy.linalg.solve_triangular(lower, b, lower=True, check_finite=False)
        z = self.rng.generator.standard_normal(b.size)
        return scipy.linalg.solve_triangular(lower.T, half + z, lower=False,
                                             check_finite=False)

    def sample_u_field(self):
        s, d = self.state, self.data
        star = s.r == 2
        resid = self.kappa - s.omega * (d.x @ s.beta)
        c_inv = linalg.chol_solve(self.proj_u.c_chol, np.eye(self.M))
        m_blocks, q = self._field_system(self.proj_u, star, resid, s.omega,
                                         s.tau_u, c_inv, s.u_bar0)
        s.u_bar = self._draw_field(m_blocks, q)
        self._refresh_binomial_part()

    def _field_system(self, proj, include, resid, omega, tau, c_inv, field0):
        """Block mean vector and block-tridiagonal precision of a latent field."""
        T, M = self.data.T, self.M
        m_blocks = []
        diag = []
        for t in range(T):
            mask = self.period_masks[t] & include
            rows = proj.rows[mask]
            om = omega[mask]
            a_t = rows.T @ (om[:, None] * rows)
            mvec = rows.T @ resid[mask]
            scale = 2.0 if t < T - 1 else 1.0
            diag.append(scale * tau * c_inv + a_t)
            m_blocks.append(mvec)
        m_blocks[0] = m_blocks[0] + tau * (c_inv @ field0)
        off = [-tau * c_inv for _ in range(T - 1)]
        return m_blocks, linalg.BlockTridiagonalPrecision(diag, off)

    def _draw_field(self, m_blocks, q):
        if self.config.smoother == "rue":
            flat = linalg.sample_rue(np.concatenate(m_blocks), q, self.rng)
            return flat.reshape(self.data.T, self.M)
        return np.vstack(linalg.sample_mccausland(m_blocks, q, self.rng))

    def sample_u0(self):
        s = self.state
        z = self.rng.generator.standard_normal(self.M)
        s.u_bar0 = 0.5 * s.u_bar[0] + (self.proj_u.c_chol @ z) / np.sqrt(2.0 * s.tau_u)

    def _field_quadratic(self, c_chol, field, field0):
        """field0' C^-1 field0 + sum_t (f_t - f_{t-1})' C^-1 (f_t - f_{t-1})."""
        diffs = np.vstack([field0, field])
        diffs = diffs[1:] - diffs[:-1]
        z0 = scipy.linalg.solve_triangular(c_chol, field0, lower=True,
                                           check_finite=False)
        zd = scipy.linalg.solve_triangular(c_chol, diffs.T, lower=True,
                                           check_finite=False)
        return float(z0 @ z0), float((zd * zd).sum())

    def sample_tau_u(self):
        s, pr = self.state, self.priors
        quad0, quad = self._field_quadratic(self.proj_u.c_chol, s.u_bar, s.u_bar0)
        shape = pr.a_u + self.M * (self.data.T + 1) / 2.0
        rate = pr.b_u + 0.5 * (quad0 + quad)
        s.tau_u = float(self.rng.generator.gamma(shape, 1.0 / rate))

    # -- range parameter MH ----------------------------------------------

    def _field_log_prior(self, c_chol, field, field0, tau):
        T, M = field.shape
        quad0, quad = self._field_quadratic(c_chol, field, field0)
        logdet = linalg.chol_logdet(c_chol)
        return (0.5 * M * (T + 1) * np.log(tau)
                - 0.5 * (T + 1) * logdet
                - 0.5 * tau * (quad0 + quad))

    def _phi_mh(self, name, phi, log_target, apply_fn):
        """One logit-scale random-walk MH step for a range parameter."""
        pr = self.priors
        gen = self.rng.generator
        width = pr.phi_hi - pr.phi_lo
        z = np.log((phi - pr.phi_lo) / (pr.phi_hi - phi))
        z_new = z + self._phi_step[name] * gen.standard_normal()
        phi_new = pr.phi_lo + width * expit(z_new)
        # log |dphi/dz| for current and proposed points
        jac = np.log(phi - pr.phi_lo) + np.log(pr.phi_hi - phi)
        jac_new = np.log(phi_new - pr.phi_lo) + np.log(pr.phi_hi - phi_new)
        num, payload = log_target(phi_new)
        den, _ = log_target(phi)
        log_alpha = (num + jac_new) - (den + jac)
        self._phi_tries[name] += 1
        accepted = np.log(gen.random()) < log_alpha
        if accepted:
            self._phi_accept[name] += 1
            apply_fn(phi_new, payload)
        return accepted

    def _adapt(self, name, iteration):
        if not self.config.adapt_phi or iteration >= self.config.burn_in:
            return
        rate = self._phi_accept[name] / max(self._phi_tries[name], 1)
        step = self._phi_step[name] * np.exp((rate - 0.44) / np.sqrt(iteration + 1))
        self._phi_step[name] = float(np.clip(step, 1e-3, 10.0))

    def sample_phi_u(self):
        s, d = self.state, self.data

        def log_target(phi):
            proj = self.proj_u if phi == s.phi_u else spatial.build_projector(
                self.sites_by_period, self.knots, phi)
            u = proj.project(s.u_bar, d.period)
            eta = d.x @ s.beta + u
            star = s.r == 2
            loglik = float(np.sum(self.log_binom_coef[star] + d.y[star] * eta[star]
                                  - d.n[star] * _log1pexp(eta[star])))
            prior = self._field_log_prior(proj.c_chol, s.u_bar, s.u_bar0, s.tau_u)
            return loglik + prior, proj

        def apply(phi_new, proj):
            s.phi_u = float(phi_new)
            self.proj_u = proj
            self._refresh_binomial_part()

        self._phi_mh("u", s.phi_u, log_target, apply)

    def sample_phi_xi(self, k: int):
        s, d = self.state, self.data
        name = f"xi{k}"

        def log_target(phi):
            proj = self.proj_xi[k] if phi == s.phi_xi[k] else spatial.build_projector(
                self.sites_by_period, self.knots, phi)
            xi_k = proj.project(s.xi_bar[k], d.period)
            psi_k = d.x @ s.gamma[k] + xi_k
            lse = _log1pexp(np.logaddexp(psi_k, self.psi[1 - k]))
            in_class = s.r == k
            loglik = float(np.sum(psi_k[in_class] - lse[in_class]))
            prior = self._field_log_prior(proj.c_chol, s.xi_bar[k], s.xi_bar0[k],
                                          s.tau_xi[k])
            return loglik + prior, proj

        def apply(phi_new, proj):
            s.phi_xi[k] = float(phi_new)
            self.proj_xi[k] = proj
            self._refresh_mixture_part()

        self._phi_mh(name, s.phi_xi[k], log_target, apply)

    # -- step 3: mixture part --------------------------------------------

    def _psi_other(self, k):
        return _log1pexp(self.psi[1 - k])

    def sample_pg_multinomial(self, k: int):
        s = self.state
        arg = self.psi[k] - self._psi_other(k)
        s.omega_k[k] = draw_pg_vector(np.ones(self.data.N, dtype=np.int64),
                                      arg, self.rng)

    def sample_gamma_k(self, k: int):
        s, d, pr = self.state, self.data, self.priors
        kappa_k = (s.r == k) - 0.5
        psi_other = self._psi_other(k)
        om = s.omega_k[k]
        g = pr.G0[k] @ pr.g0[k] + d.x.T @ (kappa_k + om * (psi_other - self.xi[k]))
        G = pr.G0[k] + d.x.T @ (om[:, None] * d.x)
        s.gamma[k] = self._draw_gaussian(g, G)
        self._refresh_mixture_part()

    def sample_xi_field(self, k: int):
        s, d = self.state, self.data
        kappa_k = (s.r == k) - 0.5
        om = s.omega_k[k]
        resid = kappa_k + om * (self._psi_other(k) - d.x @ s.gamma[k])
        c_inv = linalg.chol_solve(self.proj_xi[k].c_chol, np.eye(self.M))
        everything = np.ones(d.N, dtype=bool)
        m_blocks, q = self._field_system(self.proj_xi[k], everything, resid, om,
                                         s.tau_xi[k], c_inv, s.xi_bar0[k])
        s.xi_bar[k] = self._draw_field(m_blocks, q)
        self._refresh_mixture_part()

    def sample_xi0(self, k: int):
        s = self.state
        z = self.rng.generator.standard_normal(self.M)
        s.xi_bar0[k] = (0.5 * s.xi_bar[k][0]
                        + (self.proj_xi[k].c_chol @ z) / np.sqrt(2.0 * s.tau_xi[k]))

    def sample_tau_xi(self, k: int):
        s, pr = self.state, self.priors
        quad0, quad = self._field_quadratic(self.proj_xi[k].c_chol,
                                            s.xi_bar[k], s.xi_bar0[k])
        shape = pr.a_xi[k] + self.M * (self.data.T + 1) / 2.0
        rate = pr.b_xi[k] + 0.5 * (quad0 + quad)
        s.tau_xi[k] = float(self.rng.generator.gamma(shape, 1.0 / rate))

    # -- full sweep ------------------------------------------------------

    def gibbs_sweep(self, iteration: int = 0):
        if self.inflated:
            self.sample_indicators()
        self.sample_pg_binomial()
        self.sample_beta()
        self.sample_u_field()
        self.sample_u0()
        self.sample_tau_u()
        self.sample_phi_u()
        self._adapt("u", iteration)
        if self.inflated:
            for k in range(2):
                self.sample_pg_multinomial(k)
                self.sample_gamma_k(k)
                self.sample_xi_field(k)
                self.sample_xi0(k)
                self.sample_tau_xi(k)
                self.sample_phi_xi(k)
                self._adapt(f"xi{k}", iteration)
        return self.state

    def mixture_cdf(self) -> np.ndarray:
        """Current per-observation CDF value: p1 + (1 - p0 - p1) * pi."""
        if not self.inflated:
            return self.pi.copy()
        p0 = np.exp(self.log_p[0])
        p1 = np.exp(self.log_p[1])
        return p1 + np.exp(self.log_p2) * self.pi


def run_chain(data: PanelDataset, priors: Priors | None, config: ChainConfig) -> PosteriorDraws:
    """Run one chain and collect retained draws."""
    config.validate()
    if priors is None:
        priors = default_priors(data)
    rng = RngStream(config.seed, config.stream_id)
    sampler = GibbsSampler(data, priors, config, rng)
    kept = (config.iterations - config.burn_in) // config.thin
    q, N = data.q, data.N
    params = {
        "beta": np.empty((kept, q)),
        "gamma0": np.empty((kept, q)),
        "gamma1": np.empty((kept, q)),
        "tau_u": np.empty((kept, 1)),
        "tau_xi0": np.empty((kept, 1)),
        "tau_xi1": np.empty((kept, 1)),
        "phi_u": np.empty((kept, 1)),
        "phi_xi0": np.empty((kept, 1)),
        "phi_xi1": np.empty((kept, 1)),
    }
    pi = np.empty((kept, N))
    p0 = np.empty((kept, N))
    p1 = np.empty((kept, N))
    cdf = np.empty((kept, N))
    j = 0
    for it in range(config.iterations):
        sampler.gibbs_sweep(it)
        if it >= config.burn_in and (it - config.burn_in) % config.thin == 0 and j < kept:
            s = sampler.state
            params["beta"][j] = s.beta
            params["gamma0"][j] = s.gamma[0]
            params["gamma1"][j] = s.gamma[1]
            params["tau_u"][j] = s.tau_u
            params["tau_xi0"][j] = s.tau_xi[0]
            params["tau_xi1"][j] = s.tau_xi[1]
            params["phi_u"][j] = s.phi_u
            params["phi_xi0"][j] = s.phi_xi[0]
            params["phi_xi1"][j] = s.phi_xi[1]
            pi[j] = sampler.pi
            if sampler.inflated:
                p0[j] = np.exp(sampler.log_p[0])
                p1[j] = np.exp(sampler.log_p[1])
            else:
                p0[j] = 0.0
                p1[j] = 0.0
            cdf[j] = sampler.mixture_cdf()
            j += 1
    accept = {k: sampler._phi_accept[k] / max(sampler._phi_tries[k], 1)
              for k in sampler._phi_tries}
    return PosteriorDraws(params=params, pi=pi, p0=p0, p1=p1, cdf=cdf,
                          model=config.model, accept_phi=accept)


# ----------------------------------------------------------------------
# forward simulation (posterior predictive / correctness harness)
# ----------------------------------------------------------------------

def simulate_counts(sampler: GibbsSampler, rng: RngStream):
    """Draw (r, y) from the model at the sampler's current parameters."""
    d = sampler.data
    gen = rng.generator
    if sampler.inflated:
        p0 = np.exp(sampler.log_p[0])
        p1 = np.exp(sampler.log_p[1])
        u = gen.random(d.N)
        r = np.where(u < p0, 0, np.where(u < p0 + p1, 1, 2))
    else:
        r = np.full(d.N, 2, dtype=np.int64)
    y = np.where(r == 0, 0,
                 np.where(r == 1, d.n, gen.binomial(d.n, sampler.pi)))
    return r, y


def draw_state_from_prior(sampler: GibbsSampler, rng: RngStream):
    """Replace the sampler state by an exact draw from the prior."""
    s, pr, d = sampler.state, sampler.priors, sampler.data
    gen = rng.generator
    M, T, q = sampler.M, d.T, d.q

    def mvn_prec(mean, prec):
        lower = linalg.cholesky(prec)
        return mean + scipy.linalg.solve_triangular(
            lower.T, gen.standard_normal(q), lower=False, check_finite=False)

    s.beta = mvn_prec(pr.b0, pr.B0)
    for k in range(2):
        s.gamma[k] = mvn_prec(pr.g0[k], pr.G0[k])
    s.tau_u = float(gen.gamma(pr.a_u, 1.0 / pr.b_u))
    s.tau_xi = np.array([gen.gamma(pr.a_xi[k], 1.0 / pr.b_xi[k]) for k in range(2)])
    s.phi_u = float(gen.uniform(pr.phi_lo, pr.phi_hi))
    s.phi_xi = gen.uniform(pr.phi_lo, pr.phi_hi, size=2)

    sampler.proj_u = spatial.build_projector(sampler.sites_by_period, sampler.knots,
                                             s.phi_u)
    sampler.proj_xi = [spatial.build_projector(sampler.sites_by_period,
                                               sampler.knots, s.phi_xi[k])
                       for k in range(2)]

    def walk(c_chol, tau):
        f0 = (c_chol @ gen.standard_normal(M)) / np.sqrt(tau)
        f = np.empty((T, M))
        prev = f0
        for t in range(T):
            prev = prev + (c_chol @ gen.standard_normal(M)) / np.sqrt(tau)
            f[t] = prev
        return f0, f

    s.u_bar0, s.u_bar = walk(sampler.proj_u.c_chol, s.tau_u)
    for k in range(2):
        s.xi_bar0[k], s.xi_bar[k] = walk(sampler.proj_xi[k].c_chol, s.tau_xi[k])
    sampler._refresh_binomial_part()
    sampler._refresh_mixture_part()


def geweke_check(n_cycles: int = 10000, seed: int = 0, corrupt: bool = False,
                 M: int = 2, T: int = 3, n_per_period: int = 4,
                 max_trials: int = 5) -> dict:
    """Successive-conditional correctness test on a tiny model.

    Interleaves data regeneration with Gibbs sweeps and compares chain
    moments of the parameters against their exact prior moments.  Returns
    per-statistic z-scores (autocorrelation-adjusted).  ``corrupt``
    deliberately biases one conditional to verify the test's sensitivity.
    """
    rng = RngStream(seed, 900)
    gen = rng.generator
    N = T * n_per_period
    data = PanelDataset(
        T=T,
        period=np.repeat(np.arange(T), n_per_period),
        coords=gen.uniform(-1, 1, size=(N, 2)),
        x=np.column_stack([np.ones(N), gen.normal(0, 0.5, size=N)]),
        n=gen.integers(1, max_trials + 1, size=N),
        y=np.zeros(N, dtype=np.int64),
    )
    q = data.q
    priors = Priors(
        b0=np.zeros(q), B0=4.0 * np.eye(q),
        g0=[np.zeros(q), np.zeros(q)], G0=[4.0 * np.eye(q), 4.0 * np.eye(q)],
        a_u=3.0, b_u=3.0, a_xi=[3.0, 3.0], b_xi=[3.0, 3.0],
        phi_lo=0.3, phi_hi=1.5,
    )
    config = ChainConfig(iterations=2, burn_in=1, model="BIB", M=M, seed=seed,
                         adapt_phi=False, knots=gen.uniform(-1, 1, size=(M, 2)))
    sampler = GibbsSampler(data, priors, config, rng)
    if corrupt:
        sampler._kappa_bias = 0.25

    draw_state_from_prior(sampler, rng)
    r, y = simulate_counts(sampler, rng)
    sampler.set_counts(y, r)

    names = ([f"beta{j}" for j in range(q)]
             + [f"gamma{k}{j}" for k in range(2) for j in range(q)]
             + ["tau_u", "tau_xi0", "tau_xi1", "phi_u", "phi_xi0", "phi_xi1"])
    trace = np.empty((n_cycles, len(names)))
    for it in range(n_cycles):
        sampler.gibbs_sweep(it)
        r, y = simulate_counts(sampler, rng)
        sampler.set_counts(y, r)
        s = sampler.state
        trace[it] = np.concatenate([
            s.beta, s.gamma[0], s.gamma[1],
            [s.tau_u, s.tau_xi[0], s.tau_xi[1], s.phi_u, s.phi_xi[0], s.phi_xi[1]],
        ])

    # exact prior moments
    prior_mean = np.concatenate([
        priors.b0, priors.g0[0], priors.g0[1],
        [priors.a_u / priors.b_u, priors.a_xi[0] / priors.b_xi[0],
         priors.a_xi[1] / priors.b_xi[1]],
        [0.5 * (priors.phi_lo + priors.phi_hi)] * 3,
    ])
    zscores = {}
    for j, name in enumerate(names):
        x = trace[:, j]
        se = np.sqrt(_autocorr_variance(x) / x.size)
        zscores[name] = float((x.mean() - prior_mean[j]) / se)
    return zscores


def _autocorr_variance(x: np.ndarray) -> float:
    """Long-run variance via the initial positive sequence estimator."""
    x = x - x.mean()
    n = x.size
    acov = np.correlate(x, x, mode="full")[n - 1:] / n
    var = acov[0]
    total = var
    k = 1
    while k + 1 < min(n, 2000):
        pair = acov[k] + acov[k + 1]
        if pair <= 0:
            break
        total += 2.0 * pair
        k += 2
    return max(float(total), 1e-300)
