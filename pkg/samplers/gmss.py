"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.

Multiset sampler and the Metropolis-within-Gibbs baseline.

A target implements:
    has_latent (bool), bounds (ParameterBounds),
    evaluate(theta) -> payload or None,
    log_elements(thetas, payloads, latent) -> (M,) log-densities ℓ_m,
    log_shared(latent) -> float,
    initial_latent(), sample_initial(rng).

The multiset sampler targets
    π(Θ, latent) ∝ exp(log_shared) · (1/M) Σ_m exp(ℓ_m) Π_{l≠m} g(θ_l)
and weights element m of a draw by exp(ℓ_m) Π_{l≠m} g(θ_l), normalized.
"""

import logging
import math
import os

import numpy as np
from scipy.special import logsumexp

import utils
from prognostics.prospects import ProspectMap, instrumental_log_density
from samplers import chain_io
from samplers.diagnostics import cumulative_histogram_diagnostic, write_histograms
from samplers.state import ChainState, Multiset, WeightedSample


class Instrumental:
    """
    Instrumental density on the natural scale: the prospect-map density of
    the scaled point times the Jacobian of the scaling.
    """

    def __init__(self, prospect_map, bounds):
        if prospect_map.p != bounds.p:
            raise ValueError(
                f"Prospect map of dimension {prospect_map.p} for {bounds.p} parameters"
            )
        self.map = prospect_map
        self.bounds = bounds

    @classmethod
    def uniform(cls, bounds):
        return cls(ProspectMap.uniform(bounds.p), bounds)

    def log_density(self, theta):
        theta_scaled = self.bounds.to_unit(theta)
        return instrumental_log_density(theta_scaled, self.map) - self.bounds.log_jacobian

    def cells(self):
        return self.map.cells()


def mixture_terms(ells, log_g):
    """
    log of f_m Π_{l≠m} g_l for every element.
    """
    log_g = np.asarray(log_g, dtype=np.float64)
    others = np.sum(log_g) - log_g
    return np.asarray(ells, dtype=np.float64) + others


def log_mixture(ells, log_g):
    terms = mixture_terms(ells, log_g)
    if not np.any(terms > -np.inf):
        return -np.inf
    return float(logsumexp(terms) - math.log(len(terms)))


def compute_weights(ells, log_g):
    terms = mixture_terms(ells, log_g)
    if not np.any(terms > -np.inf):
        raise utils.ComputeError(
            "Cannot weight the multiset, every element has zero density"
        )
    return np.exp(terms - logsumexp(terms))


def gmss_sampling_log_density(state, target, instrumental):
    """
    Joint sampling log-density of a chain state, recomputed from the
    elements rather than read from the caches.
    """
    ms = state.multiset
    ells = target.log_elements(ms.thetas, ms.payloads, state.latent)
    log_g = np.array([instrumental.log_density(t) for t in ms.thetas])
    mix = log_mixture(ells, log_g)
    if mix == -np.inf:
        return -np.inf
    return float(target.log_shared(state.latent) + mix)


def estimate(h, samples):
    """
    Weighted posterior estimate (1/B) Σ_b Σ_m w_bm h(θ_bm). Each iteration's
    weights are renormalized, so a constant h returns that constant exactly.

    Args:
        h (callable): function of one parameter vector.
        samples: a `Chain` or a sequence of `WeightedSample`.
    """
    if hasattr(samples, "weights"):
        thetas, weights = samples.thetas, samples.weights
    else:
        samples = list(samples)
        thetas = [s.thetas for s in samples]
        weights = [s.weights for s in samples]
    thetas = np.asarray(thetas, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if len(thetas) == 0:
        raise ValueError("Cannot estimate from an empty chain")
    values = np.array([[h(t) for t in row] for row in thetas], dtype=np.float64)
    per_iteration = np.sum(weights * values, axis=1) / np.sum(weights, axis=1)
    return float(np.mean(per_iteration))


class MultisetSampler:
    """
    Generalized multiset sampler. One iteration updates every coordinate of
    every element in turn, then (for targets with latents) every replicate
    spectrum, τ² and optionally σ². Every proposal draws one normal variate
    per proposed coordinate followed by one uniform, whether or not the
    proposal leaves the support.

    Args:
        target: object implementing the target interface (module docstring).
        instrumental (Instrumental): instrumental density g.
        multiset_size (int): number of elements M.
        stepsizes (StepSizes): proposal scales; `theta` is a fraction of
            each coordinate's support width.
        seed (int): seed of the sampler's random stream.
    """

    name = "gmss"

    def __init__(
        self,
        target,
        instrumental,
        multiset_size,
        stepsizes,
        seed,
        adapt=True,
        adapt_interval=100,
        target_acceptance=0.25,
        init_attempts=1000,
        sample_sigma2=False,
    ):
        if multiset_size < 1:
            raise ValueError(f"Invalid multiset size {multiset_size}, must be >= 1.")
        self.target = target
        self.bounds = target.bounds
        self.instrumental = instrumental
        self.multiset_size = multiset_size
        self.rng = np.random.default_rng(seed)
        self.adapt_enabled = adapt
        self.adapt_interval = adapt_interval
        self.target_acceptance = target_acceptance
        self.init_attempts = init_attempts
        self.sample_sigma2 = sample_sigma2 and target.has_latent
        self.steps = {
            f"theta_{j + 1}": float(stepsizes.theta * w)
            for j, w in enumerate(self.bounds.width)
        }
        if target.has_latent:
            self.steps["s"] = float(stepsizes.s)
            self.steps["tau2"] = float(stepsizes.tau2)
            if self.sample_sigma2:
                self.steps["sigma2"] = float(stepsizes.sigma2)
        # theta steps stay within [1e-6, 1] of the support width
        self.step_limits = {
            f"theta_{j + 1}": (1e-6 * w, float(w)) for j, w in enumerate(self.bounds.width)
        }
        for key in ("s", "tau2", "sigma2"):
            if key in self.steps:
                self.step_limits[key] = (1e-6 * self.steps[key], 1e6 * self.steps[key])
        self.meters = utils.Meters()
        self.window = utils.Meters()
        self.state = None

    def _log_mix(self, ells, log_g):
        return log_mixture(ells, log_g)

    def _instrumental_log_density(self, theta):
        return self.instrumental.log_density(theta)

    def _accept(self, u, log_a):
        return math.log1p(-u) <= log_a

    def _record(self, key, accepted):
        self.meters.update(key, accepted)
        self.window.update(key, accepted)

    def initialize(self, initial=None):
        """
        Draws the starting multiset. Element m is drawn uniformly inside a
        marked prospect cell, distinct cells first; without marked cells it
        is drawn from the target's initial distribution. `initial` (M, p)
        fixes the elements instead.

        Returns:
            list of per-element initialization records.
        """
        M, p = self.multiset_size, self.bounds.p
        latent = self.target.initial_latent()
        cells = self.instrumental.cells()
        order = self.rng.permutation(len(cells)) if cells else []
        q = self.instrumental.map.q
        thetas = np.zeros((M, p))
        payloads, ells, log_g, records = [], np.zeros(M), np.zeros(M), []
        for m in range(M):
            num_failed_solves = 0
            for attempt in range(1, self.init_attempts + 1):
                mask, code, source = -1, -1, "target"
                if initial is not None:
                    theta = np.asarray(initial[m], dtype=np.float64)
                    source = "given"
                elif cells:
                    mask, code = cells[order[(m + (attempt - 1) * M) % len(cells)]]
                    theta = self._draw_in_cell(mask, code, q)
                    source = "cell"
                else:
                    theta = np.asarray(self.target.sample_initial(self.rng))
                ell = -np.inf
                payload = None
                if self.bounds.contains(theta):
                    payload = self.target.evaluate(theta)
                    if payload is None:
                        num_failed_solves += 1
                    ell = float(
                        self.target.log_elements(theta[None, :], [payload], latent)[0]
                    )
                if ell > -np.inf:
                    break
                if initial is not None:
                    raise utils.ComputeError(
                        f"Given initial element {m + 1} has zero density"
                    )
            else:
                reason = (
                    "the model solve failed or did not oscillate for every candidate"
                    if num_failed_solves == self.init_attempts
                    else "no candidate reached a finite log-density"
                )
                raise utils.ComputeError(
                    f"Could not initialize multiset element {m + 1} in "
                    f"{self.init_attempts} attempts: {reason}"
                )
            thetas[m] = theta
            payloads.append(payload)
            ells[m] = ell
            log_g[m] = self._instrumental_log_density(theta)
            records.append({
                "element": m + 1, "source": source, "subset_mask": mask,
                "cell_code": code, "attempts": attempt, "theta": theta, "logf": ell,
            })
        log_shared = float(self.target.log_shared(latent))
        if not np.isfinite(log_shared):
            raise utils.ComputeError(
                "Initial latent state has zero density (data fit or τ² prior)"
            )
        multiset = Multiset(thetas, payloads, ells, log_g)
        self.state = ChainState(
            multiset=multiset,
            latent=latent,
            iteration=0,
            log_shared=log_shared,
            log_mix=self._log_mix(ells, log_g),
        )
        logging.info(
            "Initialized {} elements, first element {}".format(
                M, self.bounds.describe(thetas[0])
            )
        )
        return records

    def _draw_in_cell(self, mask, code, q):
        u = 1.0 - self.rng.random(self.bounds.p)
        coords = [j for j in range(self.bounds.p) if mask >> j & 1]
        for j in coords:
            level = code % q
            code //= q
            u[j] = (level + 1.0 - self.rng.random()) / q
        return self.bounds.from_unit(u)

    def step_theta(self):
        ms, latent = self.state.multiset, self.state.latent
        for m in range(ms.size):
            for j in range(self.bounds.p):
                key = f"theta_{j + 1}"
                theta = ms.thetas[m].copy()
                theta[j] += self.steps[key] * self.rng.standard_normal()
                u = self.rng.random()
                accepted = False
                if self.bounds.contains(theta):
                    payload = self.target.evaluate(theta)
                    ell = float(
                        self.target.log_elements(theta[None, :], [payload], latent)[0]
                    )
                    log_g_m = self._instrumental_log_density(theta)
                    ells = ms.ells.copy()
                    ells[m] = ell
                    log_g = ms.log_g.copy()
                    log_g[m] = log_g_m
                    log_mix = self._log_mix(ells, log_g)
                    accepted = self._accept(u, log_mix - self.state.log_mix)
                if accepted:
                    ms.update(m, theta, payload, ell, log_g_m)
                    self.state.log_mix = log_mix
                self._record(key, accepted)

    def _latent_move(self, key, latent, u, theta_free=False):
        ms = self.state.multiset
        log_shared = float(self.target.log_shared(latent))
        if theta_free:
            ells, log_mix = ms.ells, self.state.log_mix
        else:
            ells = self.target.log_elements(ms.thetas, ms.payloads, latent)
            log_mix = self._log_mix(ells, ms.log_g)
        log_a = (log_shared - self.state.log_shared) + (log_mix - self.state.log_mix)
        accepted = self._accept(u, log_a)
        if accepted:
            ms.ells = np.asarray(ells, dtype=np.float64)
            self.state.latent = latent
            self.state.log_shared = log_shared
            self.state.log_mix = log_mix
        self._record(key, accepted)

    def step_latent_s(self):
        n, K = self.state.latent.s.shape
        for i in range(n):
            latent = self.state.latent
            proposal = latent.s[i] + self.steps["s"] * self.rng.standard_normal(K)
            u = self.rng.random()
            if np.all(proposal > 0):
                s = latent.s.copy()
                s[i] = proposal
                self._latent_move("s", latent.replace(s=s), u)
            else:
                self._record("s", False)

    def step_tau2(self):
        latent = self.state.latent
        tau2 = latent.tau2 + self.steps["tau2"] * self.rng.standard_normal()
        u = self.rng.random()
        if tau2 > 0:
            self._latent_move("tau2", latent.replace(tau2=float(tau2)), u)
        else:
            self._record("tau2", False)

    def step_sigma2(self):
        latent = self.state.latent
        sigma2 = latent.sigma2 + self.steps["sigma2"] * self.rng.standard_normal()
        u = self.rng.random()
        if sigma2 > 0:
            self._latent_move(
                "sigma2", latent.replace(sigma2=float(sigma2)), u, theta_free=True
            )
        else:
            self._record("sigma2", False)

    def iterate(self):
        self.step_theta()
        if self.target.has_latent:
            self.step_latent_s()
            self.step_tau2()
            if self.sample_sigma2:
                self.step_sigma2()
        self.state.iteration += 1

    def adapt(self):
        """
        Scales every block's step by exp(rate - target) using the acceptance
        rate since the previous adaptation.
        """
        for key, rate in self.window.rates().items():
            if self.steps[key] == 0:
                continue
            lo, hi = self.step_limits[key]
            step = self.steps[key] * math.exp(rate - self.target_acceptance)
            self.steps[key] = float(min(max(step, lo), hi))
        self.window.reset()

    def compute_weights(self):
        ms = self.state.multiset
        return compute_weights(ms.ells, ms.log_g)

    def weighted_sample(self):
        ms, latent = self.state.multiset, self.state.latent
        extra = {}
        if latent is not None:
            extra = {"tau2": latent.tau2, "sigma2": latent.sigma2, "s": latent.s.copy()}
        return WeightedSample(
            iteration=self.state.iteration,
            thetas=ms.thetas.copy(),
            weights=self.compute_weights(),
            ells=ms.ells.copy(),
            **extra,
        )

    def state_dict(self):
        ms, latent = self.state.multiset, self.state.latent
        return {
            "name": self.name,
            "iteration": self.state.iteration,
            "thetas": ms.thetas,
            "payloads": ms.payloads,
            "ells": ms.ells,
            "log_g": ms.log_g,
            "latent": None if latent is None else {
                "s": latent.s, "tau2": latent.tau2, "sigma2": latent.sigma2,
            },
            "log_shared": self.state.log_shared,
            "log_mix": self.state.log_mix,
            "rng": self.rng.bit_generator.state,
            "steps": dict(self.steps),
            "meters": self.meters.state_dict(),
            "window": self.window.state_dict(),
        }

    def load_state_dict(self, state):
        if state["name"] != self.name:
            raise utils.ConfigError(
                f"Checkpoint was written by the {state['name']} sampler, "
                f"resuming with {self.name}"
            )
        latent = None
        if state["latent"] is not None:
            latent = self.target.initial_latent().replace(**state["latent"])
        self.state = ChainState(
            multiset=Multiset(
                np.array(state["thetas"]), list(state["payloads"]),
                np.array(state["ells"]), np.array(state["log_g"]),
            ),
            latent=latent,
            iteration=state["iteration"],
            log_shared=state["log_shared"],
            log_mix=state["log_mix"],
        )
        self.rng.bit_generator.state = state["rng"]
        self.steps = dict(state["steps"])
        self.meters.load_state_dict(state["meters"])
        self.window.load_state_dict(state["window"])


class MetropolisWithinGibbs(MultisetSampler):
    """
    Standard Metropolis-within-Gibbs on the target itself: a single element
    scored directly by its own log-density, no instrumental density.
    Consumes the random stream exactly like `MultisetSampler` with M=1.
    """

    name = "mh"

    def __init__(self, target, stepsizes, seed, **kwargs):
        super().__init__(
            target, Instrumental.uniform(target.bounds), 1, stepsizes, seed, **kwargs
        )

    def _log_mix(self, ells, log_g):
        return float(ells[0])

    def _instrumental_log_density(self, theta):
        return 0.0

    def compute_weights(self):
        return np.ones(1)


def chain_paths(output_dir):
    return {
        name: os.path.join(output_dir, filename)
        for name, filename in (
            ("chain", chain_io.CHAIN_FILE),
            ("initialization", chain_io.INITIALIZATION_FILE),
            ("acceptance", chain_io.ACCEPTANCE_FILE),
            ("histograms", chain_io.HISTOGRAM_FILE),
            ("checkpoint", chain_io.CHECKPOINT_FILE),
        )
    }


def run_chain(sampler, cfg, output_dir, config_hash, resume=False, initial=None,
              producer="calibrate"):
    """
    Runs `sampler` for `cfg.iterations` iterations. Retained iterations are
    those after the burn-in that are multiples of `cfg.thin` past it. The
    chain file is flushed and the full sampler state checkpointed every
    `cfg.checkpoint_every` iterations; with `resume`, the run continues
    from the checkpoint and reproduces the uninterrupted chain.

    Returns:
        (Chain, HistogramDiagnostic)
    """
    os.makedirs(output_dir, exist_ok=True)
    paths = chain_paths(output_dir)
    burn_in = cfg.burn_in_iterations
    if resume and os.path.exists(paths["checkpoint"]):
        checkpoint = utils.load_checkpoint(paths["checkpoint"])
        if checkpoint["config_hash"] != config_hash:
            raise utils.ConfigError(
                f"{paths['checkpoint']} was written with config hash "
                f"{checkpoint['config_hash']}, current config hash is {config_hash}"
            )
        sampler.load_state_dict(checkpoint["sampler"])
        chain_io.truncate_chain(paths["chain"], sampler.state.iteration)
        writer = chain_io.ChainWriter(paths["chain"])
        logging.info(f"Resuming chain at iteration {sampler.state.iteration}")
    else:
        if resume:
            logging.info("No checkpoint found, starting a new chain")
        records = sampler.initialize(initial)
        chain_io.write_initialization(
            paths["initialization"], records, sampler.bounds.p, config_hash, producer
        )
        latent = sampler.state.latent
        n, K = (0, 0) if latent is None else latent.s.shape
        columns = chain_io.chain_columns(
            sampler.multiset_size, sampler.bounds.p, n, K
        )
        metadata = {
            "algorithm": sampler.name, "M": sampler.multiset_size,
            "p": sampler.bounds.p, "n": n, "K": K,
            "iterations": cfg.iterations, "burn_in": burn_in, "thin": cfg.thin,
        }
        writer = chain_io.ChainWriter.create(
            paths["chain"], columns, config_hash, producer, metadata
        )

    def checkpoint():
        writer.flush()
        utils.save_checkpoint(
            {"config_hash": config_hash, "sampler": sampler.state_dict()},
            paths["checkpoint"],
        )

    timer = utils.Timer(["iteration"])
    while sampler.state.iteration < cfg.iterations:
        timer.start("iteration")
        sampler.iterate()
        timer.stop("iteration")
        t = sampler.state.iteration
        if sampler.adapt_enabled and t <= burn_in and t % cfg.adapt_interval == 0:
            sampler.adapt()
        if t > burn_in and (t - burn_in) % cfg.thin == 0:
            writer.append(chain_io.chain_row(sampler.weighted_sample()))
        if t % cfg.checkpoint_every == 0:
            checkpoint()
        if t % cfg.log_every == 0:
            rates = sampler.meters.rates()
            logging.info(
                "Iteration {}/{}, log density {:.4f}, acceptance {}, {}".format(
                    t,
                    cfg.iterations,
                    sampler.state.log_density,
                    " ".join(f"{k}={v:.2f}" for k, v in rates.items()),
                    timer.summary(),
                )
            )
    checkpoint()
    chain_io.write_acceptance(
        paths["acceptance"], sampler.meters, sampler.steps, config_hash, producer
    )
    chain = chain_io.read_chain(paths["chain"])
    diagnostic = cumulative_histogram_diagnostic(
        chain.thetas,
        chain.weights,
        sampler.bounds,
        cfg.diagnostic_checkpoints,
        cfg.histogram_bins,
        cfg.stationarity_threshold,
    )
    write_histograms(paths["histograms"], diagnostic, config_hash, producer)
    logging.info(
        "Chain complete with {} retained iterations, stationary {} "
        "(final total variation {:.4f})".format(
            len(chain), diagnostic.stationary, diagnostic.final_tv
        )
    )
    return chain, diagnostic


def _sampler_kwargs(cfg):
    return {
        "adapt": cfg.adapt,
        "adapt_interval": cfg.adapt_interval,
        "target_acceptance": cfg.target_acceptance,
        "init_attempts": cfg.init_attempts,
        "sample_sigma2": cfg.sample_sigma2,
    }


def run_gmss(target, prospect_map, cfg, seed, output_dir, config_hash, resume=False,
             initial=None):
    """
    Multiset sampler run. `prospect_map` None (or `cfg.uniform_instrumental`)
    uses the uniform instrumental density.
    """
    if prospect_map is None or cfg.uniform_instrumental:
        instrumental = Instrumental.uniform(target.bounds)
    else:
        instrumental = Instrumental(prospect_map, target.bounds)
    sampler = MultisetSampler(
        target, instrumental, cfg.multiset_size, cfg.stepsizes, seed,
        **_sampler_kwargs(cfg),
    )
    return run_chain(sampler, cfg, output_dir, config_hash, resume, initial)


def run_standard_mh(target, cfg, seed, output_dir, config_hash, resume=False,
                    initial=None):
    sampler = MetropolisWithinGibbs(target, cfg.stepsizes, seed, **_sampler_kwargs(cfg))
    return run_chain(sampler, cfg, output_dir, config_hash, resume, initial)
