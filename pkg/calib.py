"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.
"""

import argparse
import logging
import os
import shutil
import sys

import numpy as np

import config
import utils
from datasets import bioluminescence
from interventions.analysis import (
    FeatureEvaluator,
    InterventionPlan,
    draws_from_chain,
    intervention_estimate,
    pairwise_heatmap,
    posterior_spectra,
    weighted_quantile,
    write_exceedance,
    write_heatmap,
    write_sensitivity,
    write_spectra,
)
from interventions.features import FeatureSettings
from models.bounds import ParameterBounds
from models.hierarchical import HierarchicalModel, log_model_summary
from models.oscillator import ThetaVector
from prognostics.prospects import ProspectMap
from prognostics.sweep import classify_sweep, run_sweep
from samplers import chain_io
from samplers.gmss import run_gmss, run_standard_mh

SWEEP_FILE = "sweep.csv"
PROSPECTS_FILE = "prospects.csv"
SENSITIVITY_FILE = "sensitivity.csv"
HEATMAP_FILE = "heatmap.csv"
EXCEEDANCE_FILE = "exceedance.csv"
SPECTRA_FILE = "spectra.csv"
REPORT_DIR = "report"

# files the report reads, with the command that produces each
REPORT_INPUTS = (
    (chain_io.CHAIN_FILE, "calibrate"),
    (chain_io.ACCEPTANCE_FILE, "calibrate"),
    (chain_io.HISTOGRAM_FILE, "calibrate"),
    (SENSITIVITY_FILE, "analyze"),
    (HEATMAP_FILE, "analyze"),
    (EXCEEDANCE_FILE, "analyze"),
    (SPECTRA_FILE, "analyze"),
)


def parse_args(argv=None):
    parser = argparse.ArgumentParser(
        description="Calibrate a circadian oscillator model to replicate time series."
    )
    parser.add_argument(
        "--config", type=str, help="A json configuration file for the experiment."
    )
    parser.add_argument("--seed", type=int, help="Override the configured seed.")
    parser.add_argument(
        "--workers", type=int, help="Worker processes for the sweep and analysis."
    )
    parser.add_argument("--out", type=str, help="Output directory.")
    parser.add_argument(
        "--resume", action="store_true", help="Resume the sweep or chain in --out."
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("simulate", help="Write synthetic replicate data.")
    commands.add_parser("prognose", help="Run the likelihood sweep and prospect map.")
    calibrate = commands.add_parser("calibrate", help="Sample the posterior.")
    calibrate.add_argument("--algorithm", choices=config.ALGORITHMS)
    calibrate.add_argument("--multiset-size", type=int, dest="multiset_size")
    calibrate.add_argument(
        "--uniform-instrumental",
        action="store_const",
        const=True,
        dest="uniform_instrumental",
        help="Use the uniform instrumental density instead of the prospect map.",
    )
    commands.add_parser("analyze", help="Intervention sensitivity analysis.")
    report = commands.add_parser("report", help="Bundle plot-ready outputs.")
    report.add_argument(
        "--force", action="store_true", help="Accept inputs with differing config hashes."
    )
    return parser.parse_args(argv)


def resolve_config(args):
    cfg = config.load_config(args.config) if args.config else config.parse_config({})
    return config.with_overrides(
        cfg,
        seed=args.seed,
        workers=args.workers,
        output_dir=args.out,
        algorithm=getattr(args, "algorithm", None),
        multiset_size=getattr(args, "multiset_size", None),
        uniform_instrumental=getattr(args, "uniform_instrumental", None),
    )


def output_path(cfg, filename):
    return os.path.join(cfg.output_dir, filename)


def data_path(cfg):
    return cfg.data.path or output_path(cfg, "data.csv")


def load_replicates(cfg):
    path = data_path(cfg)
    if not os.path.exists(path):
        raise utils.MissingPrerequisiteError(path, "simulate")
    series = bioluminescence.load_data(path, cfg.data.harmonics)
    if series.T != cfg.data.num_points:
        raise utils.DataError(
            f"{path}: found {series.T} time points, data.num_points is "
            f"{cfg.data.num_points}"
        )
    logging.info(f"Loaded {series.n} replicates of {series.T} hourly points from {path}")
    s_hat, sigma2 = bioluminescence.replicate_spectra(
        series, cfg.data.harmonics, cfg.data.noise_harmonics, cfg.data.sigma2
    )
    return series, s_hat, sigma2


def simulate_command(cfg, config_hash):
    try:
        theta = ThetaVector(cfg.simulate.theta, cfg.ode.c)
    except ValueError as e:
        raise utils.ConfigError(f"simulate.theta: {e}")
    series, oscillating = bioluminescence.simulate_replicates(
        theta,
        cfg.ode,
        cfg.data.num_points,
        cfg.data.replicates,
        cfg.simulate.noise_sigma,
        cfg.seed,
    )
    path = data_path(cfg)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    bioluminescence.write_data(
        path, series, config_hash,
        metadata={"seed": cfg.seed, "noise_sigma": utils.format_float(cfg.simulate.noise_sigma)},
    )
    bioluminescence.write_truth(
        bioluminescence.truth_path(path), theta.theta, theta.c,
        cfg.simulate.noise_sigma, cfg.seed, config_hash, oscillating,
    )
    logging.info(f"Wrote {series.n} synthetic replicates to {path}")


def prognose_command(cfg, config_hash, resume=False):
    _, s_hat, sigma2 = load_replicates(cfg)
    bounds = ParameterBounds.from_config(cfg.bounds)
    logging.info(
        "Sweeping {} points of the scaled cube between {} and {}".format(
            cfg.sweep.num_points, list(bounds.lower), list(bounds.upper)
        )
    )
    results = run_sweep(
        cfg, s_hat, sigma2, output_path(cfg, SWEEP_FILE), config_hash, resume
    )
    if not np.any(results.ok):
        raise utils.ComputeError("Every sweep point failed to integrate")
    best = int(np.argmax(results.logliks))
    logging.info(
        "Best sweep point {} with log-likelihood {:.4f}: {}".format(
            results.indices[best],
            results.logliks[best],
            bounds.describe(bounds.from_unit(results.u[best])),
        )
    )
    prospect_map = classify_sweep(results, cfg.sweep, cfg.seed)
    prospect_map.save(output_path(cfg, PROSPECTS_FILE), config_hash)


def calibrate_command(cfg, config_hash, resume=False):
    _, s_hat, sigma2 = load_replicates(cfg)
    model = HierarchicalModel.from_config(cfg, s_hat, sigma2)
    log_model_summary(model)
    sampler = cfg.sampler
    if sampler.algorithm == "mh":
        run_standard_mh(model, sampler, cfg.seed, cfg.output_dir, config_hash, resume)
        return
    prospect_map = None
    if not sampler.uniform_instrumental:
        path = output_path(cfg, PROSPECTS_FILE)
        if not os.path.exists(path):
            raise utils.MissingPrerequisiteError(path, "prognose")
        prospect_map = ProspectMap.load(path)
        logging.info(
            f"Instrumental density from {prospect_map.num_marked} marked cells, "
            f"high volume {prospect_map.vol_high:.4f}"
        )
    run_gmss(model, prospect_map, sampler, cfg.seed, cfg.output_dir, config_hash, resume)


def analyze_command(cfg, config_hash):
    chain = chain_io.read_chain(output_path(cfg, chain_io.CHAIN_FILE))
    _, s_hat, _ = load_replicates(cfg)
    iv = cfg.intervention
    draws = draws_from_chain(chain, iv.draw_cap, cfg.seed)
    evaluator = FeatureEvaluator(
        iv.feature,
        FeatureSettings.from_config(cfg),
        ParameterBounds.from_config(cfg.bounds),
        iv.workers,
    )
    plan = InterventionPlan.from_config(cfg)
    data_value = None
    if iv.data_period is not None:
        data_value = iv.data_period if iv.feature == "period" else 1.0 / iv.data_period
    plain, rows = intervention_estimate(draws, plan, evaluator, iv.baseline, data_value)
    logging.info(
        "Posterior {} {:.4f} (80% interval {:.4f} to {:.4f}), failure {:.2%}".format(
            iv.feature, plain.mean, plain.q10, plain.q90, plain.failure
        )
    )
    heatmaps = [
        ((j, j2), pairwise_heatmap(draws, j, j2, iv.alphas, evaluator))
        for j, j2 in iv.heatmap_pairs
    ]
    spectra = posterior_spectra(draws, s_hat, cfg.ode, cfg.data.num_points, iv.workers)
    metadata = {
        "draws": len(draws),
        "resample_seed": "none" if draws.resample_seed is None else draws.resample_seed,
    }
    write_sensitivity(output_path(cfg, SENSITIVITY_FILE), plain, rows, plan, config_hash, metadata)
    write_exceedance(
        output_path(cfg, EXCEEDANCE_FILE), rows, plan, iv.baseline, config_hash, metadata
    )
    write_heatmap(output_path(cfg, HEATMAP_FILE), heatmaps, config_hash, metadata)
    write_spectra(output_path(cfg, SPECTRA_FILE), spectra, config_hash, metadata)


def _report_trace(chain, path, config_hash):
    fmt = utils.format_float
    p = chain.thetas.shape[2]
    rows = []
    for b in range(len(chain)):
        m = chain.leading[b]
        rows.append(
            [int(chain.iterations[b]), int(m) + 1, fmt(chain.weights[b, m])]
            + [fmt(v) for v in chain.thetas[b, m]]
        )
    utils.write_table(
        path,
        ["iteration", "leading", "weight"] + [f"theta_{j}" for j in range(1, p + 1)],
        rows, config_hash, "report",
    )


def _report_posterior(chain, path, config_hash):
    fmt = utils.format_float
    B, M, p = chain.thetas.shape
    weights = (chain.weights / chain.weights.sum(axis=1, keepdims=True)).ravel()
    thetas = chain.thetas.reshape(B * M, p)
    rows = []
    for j in range(p):
        values = thetas[:, j]
        rows.append(
            [j + 1, fmt(np.dot(weights, values) / weights.sum())]
            + [fmt(weighted_quantile(values, weights, q)) for q in (0.05, 0.5, 0.95)]
        )
    utils.write_table(
        path, ["parameter", "mean", "q05", "q50", "q95"], rows, config_hash, "report"
    )


def _report_table(sensitivity_path, path, config_hash):
    _, columns, rows = utils.read_table(sensitivity_path)
    keep = [i for i, c in enumerate(columns)
            if c in ("parameter", "alpha", "failure_pct") or c.startswith("exceed_")]
    utils.write_table(
        path,
        [columns[i] for i in keep],
        [[row[i] for i in keep] for row in rows if row[0] != "0"],
        config_hash, "report",
    )


def report_command(cfg, force=False):
    inputs = []
    for filename, producer in REPORT_INPUTS:
        path = output_path(cfg, filename)
        if not os.path.exists(path):
            raise utils.MissingPrerequisiteError(path, producer)
        inputs.append(path)
    optional = output_path(cfg, PROSPECTS_FILE)
    if os.path.exists(optional):
        inputs.append(optional)
    hashes = {path: utils.read_header(path).get("config_hash") for path in inputs}
    distinct = sorted(set(hashes.values()))
    if len(distinct) > 1 and not force:
        raise utils.ConfigError(
            ["inputs were produced with different configurations:"]
            + [f"{os.path.basename(p)}: {h}" for p, h in sorted(hashes.items())]
        )
    config_hash = distinct[0] if len(distinct) == 1 else "mixed"

    out = output_path(cfg, REPORT_DIR)
    os.makedirs(out, exist_ok=True)
    chain = chain_io.read_chain(output_path(cfg, chain_io.CHAIN_FILE))
    _report_trace(chain, os.path.join(out, "trace.csv"), config_hash)
    if len(chain):
        _report_posterior(chain, os.path.join(out, "posterior.csv"), config_hash)
    for filename in (chain_io.HISTOGRAM_FILE, SENSITIVITY_FILE, HEATMAP_FILE, SPECTRA_FILE):
        shutil.copyfile(output_path(cfg, filename), os.path.join(out, filename))
    _report_table(
        output_path(cfg, SENSITIVITY_FILE), os.path.join(out, "exceedance_table.csv"),
        config_hash,
    )

    histograms = utils.read_header(output_path(cfg, chain_io.HISTOGRAM_FILE))
    _, _, acceptance = utils.read_table(output_path(cfg, chain_io.ACCEPTANCE_FILE))
    lines = [
        f"tool: {utils.TOOL_NAME} {utils.__version__}",
        f"config_hash: {config_hash}",
        f"algorithm: {chain.header.get('algorithm')}",
        f"multiset_size: {chain.header.get('M')}",
        f"retained_iterations: {len(chain)}",
        f"stationary: {histograms.get('stationary')}",
        f"final_total_variation: {histograms.get('final_tv')}",
    ]
    lines += [f"acceptance_{block}: {rate}" for block, _, _, rate, _ in acceptance]
    _, _, sensitivity = utils.read_table(output_path(cfg, SENSITIVITY_FILE))
    for row in sensitivity:
        if row[0] == "0":
            lines.append(f"posterior_feature_mean: {row[2]}")
            lines.append(f"posterior_feature_interval: {row[3]} {row[4]}")
            lines.append(f"posterior_failure_pct: {row[5]}")
    with open(os.path.join(out, "summary.txt"), "w") as fid:
        fid.write("\n".join(lines) + "\n")
    logging.info(f"Wrote report to {out}")


def main(argv=None):
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO)
    try:
        cfg = resolve_config(args)
        config_hash = config.config_hash(cfg)
        logging.info("Using the config \n{}".format(config.serialize_config(cfg)))
        logging.info(f"Config hash {config_hash}")
        os.makedirs(cfg.output_dir, exist_ok=True)
        if args.command == "simulate":
            simulate_command(cfg, config_hash)
        elif args.command == "prognose":
            prognose_command(cfg, config_hash, args.resume)
        elif args.command == "calibrate":
            calibrate_command(cfg, config_hash, args.resume)
        elif args.command == "analyze":
            analyze_command(cfg, config_hash)
        elif args.command == "report":
            report_command(cfg, args.force)
    except utils.CalibrationError as e:
        logging.error(str(e))
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
