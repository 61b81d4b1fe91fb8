"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.
"""

import collections
from dataclasses import dataclass, replace
import hashlib
import logging
import threading

import numpy as np
from scipy.stats import invgamma

from criterions.densities import log_ig, log_truncnormal_plus
from criterions.spectral import NoiseScale, log_density_shat_given_s, model_spectrum
from models.bounds import ParameterBounds
from models.oscillator import IntegrationFailure, ThetaVector

# smallest admissible latent power, keeps the truncated-normal layer finite
# where an estimated spectrum is exactly zero
MIN_POWER = np.finfo(np.float64).tiny


@dataclass(frozen=True, eq=False)
class LatentSpectra:
    """
    Attributes:
        s (np.ndarray): (n, K) latent spectra, all positive.
        tau2 (float): discrepancy variance τ².
        sigma2 (float): measurement-noise variance σ².
    """

    s: np.ndarray
    tau2: float
    sigma2: float

    def replace(self, **changes):
        return replace(self, **changes)


class SpectrumCache:
    """
    Bounded LRU memo of model spectra keyed on the raw bytes of θ. Safe for
    concurrent use from threads; each worker process builds its own.
    `maxsize=0` disables caching.
    """

    def __init__(self, maxsize=4096):
        self.maxsize = maxsize
        self._store = collections.OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key):
        if self.maxsize == 0:
            return None, False
        with self._lock:
            if key in self._store:
                self._store.move_to_end(key)
                self.hits += 1
                return self._store[key], True
            self.misses += 1
            return None, False

    def put(self, key, value):
        if self.maxsize == 0:
            return
        with self._lock:
            self._store[key] = value
            self._store.move_to_end(key)
            while len(self._store) > self.maxsize:
                self._store.popitem(last=False)

    def __len__(self):
        return len(self._store)


class HierarchicalModel:
    """
    Spectral calibration model: estimated spectra ŝ scored against latent
    spectra s through the noncentral chi-square layer, s scored against the
    model spectrum λ(θ) through a truncated normal with variance τ², inverse
    gamma priors on θ, τ² (and σ² when it is sampled).

    Also implements the sampler target interface: `evaluate`, `log_elements`,
    `log_shared`, `initial_latent` and `sample_initial`.

    Args:
        s_hat (np.ndarray): (n, K) estimated spectra.
        noise (NoiseScale): measurement-noise variance on the data grid.
        prior (PriorConfig): hyperparameters.
        bounds (ParameterBounds): sampling support for θ.
        ode (OdeConfig): integrator settings.
        variance_convention (str): "coefficient" or "literal", see
            `NoiseScale.power_variance`.
        sample_sigma2 (bool): include the σ² prior in the shared term.
        cache_size (int): spectrum memo size, 0 disables.
        tau2_init (float): starting τ².
    """

    has_latent = True

    def __init__(
        self,
        s_hat,
        noise,
        prior,
        bounds,
        ode,
        variance_convention="coefficient",
        sample_sigma2=False,
        cache_size=4096,
        tau2_init=1.0,
    ):
        self.s_hat = np.atleast_2d(np.asarray(s_hat, dtype=np.float64))
        if np.any(self.s_hat < 0):
            raise ValueError("Estimated spectra must be non-negative")
        self.n, self.K = self.s_hat.shape
        self.noise = noise
        self.num_points = noise.T
        self.prior = prior
        self.bounds = bounds
        self.ode = ode
        self.variance_convention = variance_convention
        self.sample_sigma2 = sample_sigma2
        self.tau2_init = tau2_init
        self.cache = SpectrumCache(cache_size)
        settings = repr((ode, self.K, self.num_points)).encode("utf-8")
        self._settings_key = hashlib.sha1(settings).digest()

    @classmethod
    def from_config(cls, cfg, s_hat, sigma2):
        return cls(
            s_hat,
            NoiseScale(sigma2, cfg.data.num_points),
            cfg.prior,
            ParameterBounds.from_config(cfg.bounds),
            cfg.ode,
            variance_convention=cfg.data.variance_convention,
            sample_sigma2=cfg.sampler.sample_sigma2,
            cache_size=cfg.sampler.cache_size,
            tau2_init=cfg.sampler.tau2_init,
        )

    @property
    def p(self):
        return self.bounds.p

    def power_variance(self, sigma2):
        return NoiseScale(sigma2, self.num_points).power_variance(
            self.variance_convention
        )

    def evaluate(self, theta):
        """
        Model spectrum λ(θ) as a (K,) array, or None when θ is invalid or the
        integration fails. Memoized.
        """
        theta = np.asarray(theta, dtype=np.float64)
        key = self._settings_key + theta.tobytes()
        value, hit = self.cache.get(key)
        if hit:
            return value
        try:
            vector = ThetaVector(theta, self.ode.c)
        except ValueError:
            return None
        spectrum = model_spectrum(vector, self.K, self.ode, self.num_points)
        value = None if isinstance(spectrum, IntegrationFailure) else spectrum.s
        if value is not None:
            value.setflags(write=False)
        self.cache.put(key, value)
        return value

    def log_prior_theta(self, thetas):
        thetas = np.atleast_2d(thetas)
        if self.prior.flat:
            return np.zeros(len(thetas))
        return np.sum(log_ig(thetas, self.prior.a_theta, self.prior.b_theta), axis=1)

    def log_prior_tau2(self, tau2):
        if self.prior.flat:
            return 0.0 if tau2 > 0 else -np.inf
        return log_ig(tau2, self.prior.a_tau, self.prior.b_tau)

    def log_prior_sigma2(self, sigma2):
        if self.prior.flat:
            return 0.0 if sigma2 > 0 else -np.inf
        return log_ig(sigma2, self.prior.a_sigma, self.prior.b_sigma)

    def log_data_fit(self, s, sigma2):
        v = self.power_variance(sigma2)
        return float(np.sum(log_density_shat_given_s(self.s_hat, s, v)))

    def log_discrepancy(self, s, lams, tau2):
        """
        Σ_ik log N⁺(s_ik | λ_k, τ²) for each row of `lams` (M, K); rows that
        are NaN (failed solves) give -inf.
        """
        lams = np.atleast_2d(lams)
        failed = np.any(np.isnan(lams), axis=1)
        safe = np.where(failed[:, None], 0.0, lams)
        terms = log_truncnormal_plus(s[None, :, :], safe[:, None, :], tau2)
        # row sums independent of the batch size
        out = np.ascontiguousarray(terms).reshape(len(lams), -1).sum(axis=1)
        return np.where(failed, -np.inf, out)

    def log_elements(self, thetas, payloads, latent):
        """
        Per-element log density ℓ_m = log prior(θ_m) + discrepancy layer.
        """
        lams = np.array(
            [
                np.full(self.K, np.nan) if lam is None else lam
                for lam in payloads
            ]
        )
        return self.log_prior_theta(thetas) + self.log_discrepancy(
            latent.s, lams, latent.tau2
        )

    def log_shared(self, latent):
        """
        Terms of the joint density that do not depend on θ.
        """
        out = self.log_data_fit(latent.s, latent.sigma2) + self.log_prior_tau2(
            latent.tau2
        )
        if self.sample_sigma2:
            out += self.log_prior_sigma2(latent.sigma2)
        return float(out)

    def initial_latent(self):
        return LatentSpectra(
            s=np.maximum(self.s_hat, MIN_POWER),
            tau2=float(self.tau2_init),
            sigma2=float(self.noise.sigma2_F),
        )

    def sample_initial(self, rng):
        """
        Draw from the inverse gamma prior truncated to the support, by
        inversion of the CDF. Uniform on the support for a flat prior.
        """
        if self.prior.flat:
            return self.bounds.from_unit(1.0 - rng.random(self.p))
        dist = invgamma(self.prior.a_theta, scale=self.prior.b_theta)
        lo, hi = dist.cdf(self.bounds.lower), dist.cdf(self.bounds.upper)
        u = lo + (1.0 - rng.random(self.p)) * (hi - lo)
        theta = dist.ppf(u)
        return np.clip(theta, np.nextafter(self.bounds.lower, np.inf), self.bounds.upper)

    def sweep_log_likelihood(self, theta, tau2):
        """
        Data fit with the latent spectra held at ŝ and τ² fixed. None on a
        failed solve.
        """
        lam = self.evaluate(theta)
        if lam is None:
            return None
        s = np.maximum(self.s_hat, MIN_POWER)
        return self.log_data_fit(s, self.noise.sigma2_F) + float(
            self.log_discrepancy(s, lam, tau2)[0]
        )


def joint_log_posterior(theta, latent, model):
    """
    Unnormalized log posterior of (θ, s, τ²) given ŝ; -inf when the model
    spectrum cannot be computed.
    """
    if isinstance(theta, ThetaVector):
        theta = theta.theta
    theta = np.asarray(theta, dtype=np.float64)
    lam = model.evaluate(theta)
    if lam is None:
        return -np.inf
    element = model.log_elements(theta[None, :], [lam], latent)[0]
    if element == -np.inf:
        return -np.inf
    return float(model.log_shared(latent) + element)


def log_model_summary(model):
    logging.info(
        "Model with {} replicates, {} harmonics, noise variance {:.4g}, "
        "spectrum cache size {}".format(
            model.n, model.K, model.noise.sigma2_F, model.cache.maxsize
        )
    )
