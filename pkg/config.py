"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.

Run configuration: JSON file -> validated, frozen dataclasses.
"""

import dataclasses
from dataclasses import dataclass, field
import hashlib
import json
import typing
from typing import Optional, Tuple

from utils import ConfigError

NUM_PARAMETERS = 9

# Oscillating parameter set used as the synthetic truth and the centre of the
# default support.
REFERENCE_THETA = (0.18, 0.162, 0.009, 0.099, 0.18, 0.009, 0.162, 1.0, 1.15)


@dataclass(frozen=True)
class DataConfig:
    path: Optional[str] = None
    num_points: int = 66
    replicates: int = 3
    harmonics: int = 5
    sigma2: Optional[float] = None
    noise_harmonics: Optional[int] = None
    variance_convention: str = "coefficient"


@dataclass(frozen=True)
class OdeConfig:
    c: float = 1.0
    ic: Tuple[float, ...] = (0.1, 0.1, 0.1)
    transient: float = 200.0
    dt_out: float = 1.0
    atol: float = 1e-8
    rtol: float = 1e-8
    hill_denominator_exponent_eq3: int = 4
    overflow_guard: float = 1e12
    amp_tol: float = 1e-3


@dataclass(frozen=True)
class BoundsConfig:
    lower: Tuple[float, ...] = (0.04, 0.04, 0.002, 0.02, 0.04, 0.002, 0.04, 0.25, 0.25)
    upper: Tuple[float, ...] = (0.6, 0.5, 0.03, 0.3, 0.6, 0.03, 0.5, 3.0, 3.5)


@dataclass(frozen=True)
class PriorConfig:
    a_theta: float = 1.0
    b_theta: float = 1.0
    a_tau: float = 1.0
    b_tau: float = 1.0
    a_sigma: float = 1.0
    b_sigma: float = 1.0
    flat: bool = False


@dataclass(frozen=True)
class SimulateConfig:
    theta: Tuple[float, ...] = REFERENCE_THETA
    noise_sigma: float = 0.05


@dataclass(frozen=True)
class SweepConfig:
    num_points: int = 100 * 3**9
    batch_size: int = 3**9
    design: str = "uniform"
    q: int = 3
    d0: int = 4
    l_min: Optional[float] = None
    l_min_quantile: float = 0.999
    n_min: int = 0
    rho0: float = 0.1
    rho1: float = 1.0
    tau2: float = 1.0
    exact_volume_cap: int = 1_000_000
    mc_points: int = 1_000_000
    workers: int = 1


@dataclass(frozen=True)
class StepSizes:
    # theta is a fraction of each coordinate's support width
    theta: float = 0.02
    s: float = 0.05
    tau2: float = 0.05
    sigma2: float = 0.001


@dataclass(frozen=True)
class SamplerConfig:
    algorithm: str = "gmss"
    multiset_size: int = 20
    iterations: int = 200_000
    burn_in: Optional[int] = None
    thin: int = 10
    stepsizes: StepSizes = field(default_factory=StepSizes)
    adapt: bool = True
    adapt_interval: int = 100
    target_acceptance: float = 0.25
    tau2_init: float = 1.0
    sample_sigma2: bool = False
    init_attempts: int = 1000
    checkpoint_every: int = 1000
    cache_size: int = 4096
    histogram_bins: int = 20
    diagnostic_checkpoints: int = 10
    stationarity_threshold: float = 0.02
    uniform_instrumental: bool = False
    log_every: int = 1000

    @property
    def burn_in_iterations(self):
        if self.burn_in is not None:
            return self.burn_in
        return int(0.3 * self.iterations)


@dataclass(frozen=True)
class InterventionConfig:
    targets: Tuple[int, ...] = tuple(range(1, NUM_PARAMETERS + 1))
    alphas: Tuple[float, ...] = (0.6, 0.8, 1.0, 1.2, 1.4)
    deltas: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4)
    feature: str = "period"
    draw_cap: int = 2000
    baseline: str = "paired"
    data_period: Optional[float] = None
    window_cycles: int = 10
    nominal_period: float = 22.0
    heatmap_pairs: Tuple[Tuple[int, ...], ...] = ((4, 7),)
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    output_dir: str = "outputs"
    data: DataConfig = field(default_factory=DataConfig)
    ode: OdeConfig = field(default_factory=OdeConfig)
    bounds: BoundsConfig = field(default_factory=BoundsConfig)
    prior: PriorConfig = field(default_factory=PriorConfig)
    simulate: SimulateConfig = field(default_factory=SimulateConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    intervention: InterventionConfig = field(default_factory=InterventionConfig)


ALGORITHMS = ("gmss", "mh")
DESIGNS = ("uniform", "orthogonal_array")
FEATURES = ("period", "frequency")
BASELINES = ("paired", "data")
VARIANCE_CONVENTIONS = ("coefficient", "literal")


def _coerce(value, hint, path, errors):
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin is typing.Union:
        if value is None:
            return None
        inner = [a for a in args if a is not type(None)][0]
        return _coerce(value, inner, path, errors)
    if dataclasses.is_dataclass(hint):
        return _build(hint, value, path, errors)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            errors.append(f"{path}: expected a list, got {value!r}")
            return None
        inner = args[0]
        return tuple(
            _coerce(v, inner, f"{path}[{i}]", errors) for i, v in enumerate(value)
        )
    if hint is bool:
        if not isinstance(value, bool):
            errors.append(f"{path}: expected true/false, got {value!r}")
        return value
    if hint is int:
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if isinstance(value, bool) or not isinstance(value, int):
            errors.append(f"{path}: expected an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            errors.append(f"{path}: expected a number, got {value!r}")
            return value
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            errors.append(f"{path}: expected a string, got {value!r}")
        return value
    raise TypeError(f"Unsupported config type {hint} at {path}")


def _build(cls, raw, path, errors):
    if not isinstance(raw, dict):
        errors.append(f"{path or '<root>'}: expected an object, got {raw!r}")
        return cls()
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in sorted(set(raw) - names):
        errors.append(f"{path + '.' if path else ''}{key}: unknown key")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in raw:
            sub = f"{path}.{f.name}" if path else f.name
            kwargs[f.name] = _coerce(raw[f.name], hints[f.name], sub, errors)
    try:
        return cls(**kwargs)
    except TypeError as e:
        errors.append(f"{path or '<root>'}: {e}")
        return cls()


def _check(errors, condition, path, message):
    if not condition:
        errors.append(f"{path}: {message}")


def _positive(errors, path, value):
    _check(errors, isinstance(value, (int, float)) and value > 0, path,
           f"must be positive, got {value!r}")


def validate(cfg):
    """
    Returns the list of problems found in `cfg`, each prefixed with its
    dotted path. An empty list means the configuration is usable.
    """
    errors = []
    d = cfg.data
    _check(errors, d.num_points >= 2, "data.num_points", "must be at least 2")
    _check(errors, d.replicates >= 1, "data.replicates", "must be at least 1")
    max_k = (d.num_points - 1) // 2
    _check(errors, 1 <= d.harmonics <= max_k, "data.harmonics",
           f"must be in [1, {max_k}] for {d.num_points} points")
    if d.sigma2 is not None:
        _positive(errors, "data.sigma2", d.sigma2)
    if d.noise_harmonics is not None:
        _check(errors, 1 <= d.noise_harmonics <= (d.num_points - 2) // 2,
               "data.noise_harmonics",
               "must leave residual degrees of freedom")
    _check(errors, d.variance_convention in VARIANCE_CONVENTIONS,
           "data.variance_convention", f"must be one of {VARIANCE_CONVENTIONS}")

    o = cfg.ode
    _positive(errors, "ode.c", o.c)
    _check(errors, len(o.ic) == 3, "ode.ic", "must have 3 entries (y, w, z)")
    _check(errors, all(v >= 0 for v in o.ic), "ode.ic", "must be non-negative")
    _check(errors, o.transient >= 0, "ode.transient", "must be non-negative")
    for name in ("dt_out", "atol", "rtol", "overflow_guard", "amp_tol"):
        _positive(errors, f"ode.{name}", getattr(o, name))
    _check(errors, o.hill_denominator_exponent_eq3 in (2, 4),
           "ode.hill_denominator_exponent_eq3", "must be 2 or 4")

    b = cfg.bounds
    for name in ("lower", "upper"):
        _check(errors, len(getattr(b, name)) == NUM_PARAMETERS, f"bounds.{name}",
               f"must have {NUM_PARAMETERS} entries")
    for j, (lo, hi) in enumerate(zip(b.lower, b.upper)):
        _check(errors, 0 < lo < hi, f"bounds[{j + 1}]",
               f"need 0 < lower < upper, got ({lo}, {hi})")

    p = cfg.prior
    for name in ("a_theta", "b_theta", "a_tau", "b_tau", "a_sigma", "b_sigma"):
        _positive(errors, f"prior.{name}", getattr(p, name))

    s = cfg.simulate
    _check(errors, len(s.theta) == NUM_PARAMETERS, "simulate.theta",
           f"must have {NUM_PARAMETERS} entries")
    _check(errors, all(v >= 0 for v in s.theta), "simulate.theta",
           "must be non-negative")
    _check(errors, s.noise_sigma >= 0, "simulate.noise_sigma", "must be non-negative")

    w = cfg.sweep
    _check(errors, w.num_points >= 1, "sweep.num_points", "must be at least 1")
    _check(errors, w.batch_size >= 1, "sweep.batch_size", "must be at least 1")
    _check(errors, w.design in DESIGNS, "sweep.design", f"must be one of {DESIGNS}")
    _check(errors, w.q >= 2, "sweep.q", "must be at least 2")
    _check(errors, 1 <= w.d0 <= NUM_PARAMETERS, "sweep.d0",
           f"must be in [1, {NUM_PARAMETERS}]")
    _check(errors, 0 < w.l_min_quantile < 1, "sweep.l_min_quantile", "must be in (0, 1)")
    _check(errors, w.n_min >= 0, "sweep.n_min", "must be non-negative")
    _positive(errors, "sweep.rho0", w.rho0)
    _check(errors, w.rho1 >= w.rho0, "sweep.rho1", "must be at least sweep.rho0")
    _positive(errors, "sweep.tau2", w.tau2)
    _check(errors, w.mc_points >= 1_000_000, "sweep.mc_points", "must be at least 1e6")
    _check(errors, w.workers >= 1, "sweep.workers", "must be at least 1")

    m = cfg.sampler
    _check(errors, m.algorithm in ALGORITHMS, "sampler.algorithm",
           f"must be one of {ALGORITHMS}")
    _check(errors, m.multiset_size >= 1, "sampler.multiset_size", "must be at least 1")
    _check(errors, m.algorithm != "mh" or m.multiset_size == 1,
           "sampler.multiset_size", "must be 1 for algorithm mh")
    _check(errors, m.iterations >= 0, "sampler.iterations", "must be non-negative")
    if m.burn_in is not None:
        _check(errors, 0 <= m.burn_in <= m.iterations, "sampler.burn_in",
               "must be in [0, iterations]")
    _check(errors, m.thin >= 1, "sampler.thin", "must be at least 1")
    for name in ("theta", "s", "tau2", "sigma2"):
        _check(errors, getattr(m.stepsizes, name) >= 0, f"sampler.stepsizes.{name}",
               "must be non-negative")
    _check(errors, m.adapt_interval >= 1, "sampler.adapt_interval", "must be at least 1")
    _check(errors, 0 < m.target_acceptance < 1, "sampler.target_acceptance",
           "must be in (0, 1)")
    _positive(errors, "sampler.tau2_init", m.tau2_init)
    _check(errors, m.init_attempts >= 1, "sampler.init_attempts", "must be at least 1")
    _check(errors, m.checkpoint_every >= 1, "sampler.checkpoint_every",
           "must be at least 1")
    _check(errors, m.cache_size >= 0, "sampler.cache_size", "must be non-negative")
    _check(errors, m.histogram_bins >= 1, "sampler.histogram_bins", "must be at least 1")
    _check(errors, m.diagnostic_checkpoints >= 2, "sampler.diagnostic_checkpoints",
           "must be at least 2")
    _positive(errors, "sampler.stationarity_threshold", m.stationarity_threshold)
    _check(errors, m.log_every >= 1, "sampler.log_every", "must be at least 1")

    iv = cfg.intervention
    _check(errors, len(iv.targets) >= 1, "intervention.targets", "must not be empty")
    _check(errors, all(1 <= j <= NUM_PARAMETERS for j in iv.targets),
           "intervention.targets", f"indices must be in [1, {NUM_PARAMETERS}]")
    _check(errors, len(iv.alphas) >= 1 and all(a > 0 for a in iv.alphas),
           "intervention.alphas", "must be a non-empty list of positive factors")
    _check(errors, all(dl > 0 for dl in iv.deltas), "intervention.deltas",
           "must be positive")
    _check(errors, iv.feature in FEATURES, "intervention.feature",
           f"must be one of {FEATURES}")
    _check(errors, iv.draw_cap >= 1, "intervention.draw_cap", "must be at least 1")
    _check(errors, iv.baseline in BASELINES, "intervention.baseline",
           f"must be one of {BASELINES}")
    _check(errors, iv.baseline != "data" or iv.data_period is not None,
           "intervention.data_period", "required when baseline is 'data'")
    if iv.data_period is not None:
        _positive(errors, "intervention.data_period", iv.data_period)
    _check(errors, iv.window_cycles >= 2, "intervention.window_cycles",
           "must be at least 2")
    _positive(errors, "intervention.nominal_period", iv.nominal_period)
    for i, pair in enumerate(iv.heatmap_pairs):
        ok = (len(pair) == 2 and pair[0] != pair[1]
              and all(1 <= j <= NUM_PARAMETERS for j in pair))
        _check(errors, ok, f"intervention.heatmap_pairs[{i}]",
               "must be two distinct parameter indices")
    _check(errors, iv.workers >= 1, "intervention.workers", "must be at least 1")
    return errors


def parse_config(raw):
    """
    Builds and validates a `RunConfig` from a JSON object. Every problem is
    collected before raising, so one `ConfigError` lists all of them.
    """
    errors = []
    cfg = _build(RunConfig, raw, "", errors)
    try:
        errors.extend(validate(cfg))
    except (TypeError, ValueError):
        # mistyped fields are already reported
        pass
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path):
    try:
        with open(path, "r") as fid:
            raw = json.load(fid)
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config ({e.strerror})")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}")
    return parse_config(raw)


def to_dict(cfg):
    return json.loads(json.dumps(dataclasses.asdict(cfg)))


def serialize_config(cfg):
    return json.dumps(to_dict(cfg), sort_keys=True, indent=2) + "\n"


def config_hash(cfg):
    raw = to_dict(cfg)
    # these do not influence any result
    raw.pop("output_dir")
    raw["sweep"].pop("workers")
    raw["intervention"].pop("workers")
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def with_overrides(cfg, seed=None, workers=None, output_dir=None, algorithm=None,
                   multiset_size=None, uniform_instrumental=None):
    """
    Applies command-line overrides and re-validates.
    """
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    if output_dir is not None:
        cfg = dataclasses.replace(cfg, output_dir=output_dir)
    if workers is not None:
        cfg = dataclasses.replace(
            cfg,
            sweep=dataclasses.replace(cfg.sweep, workers=workers),
            intervention=dataclasses.replace(cfg.intervention, workers=workers),
        )
    sampler = cfg.sampler
    if algorithm is not None:
        sampler = dataclasses.replace(sampler, algorithm=algorithm)
        if algorithm == "mh" and multiset_size is None:
            sampler = dataclasses.replace(sampler, multiset_size=1)
    if multiset_size is not None:
        sampler = dataclasses.replace(sampler, multiset_size=multiset_size)
    if uniform_instrumental is not None:
        sampler = dataclasses.replace(sampler, uniform_instrumental=uniform_instrumental)
    cfg = dataclasses.replace(cfg, sampler=sampler)
    errors = validate(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg
