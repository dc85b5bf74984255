"""Command-line entry points for sweeps and single designs.

Exit codes: 0 on success, 2 on configuration errors, 3 when some sweep cells
failed (partial results are still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments
from .channel import build_link_statistics, noise_variance
from .geometry import build_scenario
from .rates import ergodic_rates_mc
from .wmmse import DesignInputs, OptimizerSettings, optimize_variant

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3


def _load_config(args) -> experiments.ExperimentConfig:
    doc = {}
    if args.config:
        doc = json.loads(Path(args.config).read_text())
    config = experiments.ExperimentConfig.from_json_dict(doc)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.variants is not None:
        overrides["variants"] = tuple(v.strip()
                                      for v in args.variants.split(",") if v)
    if overrides:
        doc = config.to_json_dict()
        doc.update(overrides)
        config = experiments.ExperimentConfig.from_json_dict(doc)
    return config


def _run_sweep(args, runner, filename: str) -> int:
    try:
        config = _load_config(args)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    table = runner(config, workers=args.workers)
    csv_path, sidecar = experiments.persist(
        table, Path(config.output_dir) / filename)
    print(f"wrote {csv_path} and {sidecar.name} "
          f"({len(table.rows)} rows, {len(table.failures)} failures)")
    for item in table.summary():
        print(f"  {item['variant']} @ {item['sweep_value']}: "
              f"mmfr {item['mmfr_true']:.4f} +- {item['stderr']:.4f} "
              f"(bound {item['mmfr_ub']:.4f})")
    return EXIT_PARTIAL if table.failures else EXIT_OK


def _run_single(args) -> int:
    try:
        config = _load_config(args)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rng_master = np.random.SeedSequence(config.seed)
    scen_seed, stats_seed, design_seed, mc_seed = [
        int(np.random.default_rng(s).integers(0, 2**63 - 1))
        for s in rng_master.spawn(4)]
    scenario = build_scenario(replace(config.scenario, rng_seed=scen_seed))
    stats = build_link_statistics(scenario, config.arrays,
                                  np.random.default_rng(stats_seed))
    sigma2 = noise_variance(config.arrays.noise_temperature_k,
                            config.arrays.bandwidth_hz)
    stats_n = [[ls.scaled(1.0 / sigma2) for ls in row] for row in stats]
    inputs = DesignInputs(stats=stats_n, mask=scenario.association_mask(),
                          nearest_sat=np.argmin(scenario.distances_km, axis=1),
                          m_per_sat=config.arrays.num_sat_antennas)
    power_w = 10 ** (args.power_dbw / 10.0)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "scenario.json").write_text(scenario.to_json())
    exit_code = EXIT_OK
    for variant in config.variants:
        settings = OptimizerSettings(
            power_budget_w=power_w, variant=variant,
            max_iters=config.max_iters, rel_obj_tol=config.rel_obj_tol,
            solver_tol=config.solver_tol)
        try:
            result = optimize_variant(
                inputs, settings, rng=np.random.default_rng(design_seed),
                design_realizations=config.design_realizations)
        except Exception as exc:  # noqa: BLE001
            print(f"{variant}: failed: {exc!r}", file=sys.stderr)
            exit_code = EXIT_PARTIAL
            continue
        for i, trace in enumerate(result.traces):
            (out_dir / f"trace_{variant}_{i}.json").write_text(trace.to_json())
        if result.precoder is not None:
            report = ergodic_rates_mc(
                inputs.stats, result.precoder.q, 1.0, config.mc_samples,
                np.random.default_rng(mc_seed))
            (out_dir / f"rates_{variant}.json").write_text(report.to_json())
            print(f"{variant}: design objective {result.design_objective:.4f}"
                  f" bits/s/Hz, Monte Carlo MMFR {report.mmfr:.4f}"
                  f" ({result.iterations} iterations)")
        else:
            print(f"{variant}: design objective {result.design_objective:.4f}"
                  f" bits/s/Hz ({result.iterations} iterations)")
    return exit_code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="leo-rsma",
        description="Statistical-CSI RSMA precoding experiments for "
                    "cooperative LEO satellite downlinks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("power-sweep", "average MMFR versus transmit power"),
            ("sat-sweep", "average MMFR versus number of satellites"),
            ("single", "one design plus evaluation with trace dump")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", help="JSON experiment config path")
        cmd.add_argument("--seed", type=int, help="override experiment seed")
        cmd.add_argument("--out", help="override output directory")
        cmd.add_argument("--variants",
                         help="comma-separated design variant list")
        cmd.add_argument("--workers", type=int, default=1,
                         help="parallel drops (threads)")
        if name == "single":
            cmd.add_argument("--power-dbw", type=float, default=15.0,
                             help="per-satellite power budget")
    args = parser.parse_args(argv)
    if args.command == "power-sweep":
        return _run_sweep(args, experiments.run_power_sweep, "power_sweep.csv")
    if args.command == "sat-sweep":
        return _run_sweep(args, experiments.run_satellite_sweep,
                          "sat_sweep.csv")
    return _run_single(args)


if __name__ == "__main__":
    sys.exit(main())
