"""Experiment harness: sweeps, Monte Carlo evaluation, and persistence.

A sweep cell is one (sweep value, drop, variant) triple.  Every cell derives
its own RNG streams from the experiment seed and the cell coordinates, so
results are independent of execution order and the CSV output is
byte-reproducible for a fixed configuration.  Wall-clock timings are kept
out of the CSV (they live in the JSON sidecar) so the data file stays
deterministic.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .channel import (ArrayConfig, build_link_statistics, effective_channel,
                      noise_variance)
from .geometry import ScenarioConfig, build_scenario
from .rates import (RateReport, allocate_common_rate, ergodic_rates_mc,
                    grouped_ergodic_rates_mc, grouped_rates_from_gram,
                    instantaneous_rates)
from .wmmse import (DesignInputs, OptimizerSettings, VariantResult,
                    basis_from_transmit_responses, optimize_variant,
                    wmmse_optimize)

CSV_HEADER = "sweep,sweep_value,variant,drop,mmfr_ub,mmfr_true,mmfr_stderr,iterations"
SIDECAR_SCHEMA = "leo-rsma/results-sidecar/v1"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = ScenarioConfig()
    arrays: ArrayConfig = ArrayConfig()
    power_grid_dbw: tuple[float, ...] = (5.0, 10.0, 15.0, 20.0)
    satellite_grid: tuple[int, ...] = (1, 2, 4)
    variants: tuple[str, ...] = ("rsma-scsi", "sdma-scsi")
    mc_samples: int = 5000
    design_realizations: int = 50   # iCSI designs per cell
    num_drops: int = 10
    seed: int = 0
    output_dir: str = "results"
    power_dbw_for_sat_sweep: float = 15.0
    max_iters: int = 40
    rel_obj_tol: float = 1e-5
    solver_tol: float = 1e-7

    def __post_init__(self):
        if not self.power_grid_dbw or not self.satellite_grid:
            raise ConfigError("sweep grids must be nonempty")
        if not self.variants:
            raise ConfigError("variant list must be nonempty")
        if self.mc_samples < 100:
            raise ConfigError("mc_samples must be >= 100")
        if self.num_drops < 1:
            raise ConfigError("num_drops must be >= 1")

    def to_json_dict(self) -> dict:
        return {
            "scenario": {
                "altitude_km": self.scenario.altitude_km,
                "max_nadir_angle_deg": self.scenario.max_nadir_angle_deg,
                "num_satellites": self.scenario.num_satellites,
                "num_uts": self.scenario.num_uts,
                "satellite_spacing_deg": self.scenario.satellite_spacing_deg,
                "earth_radius_km": self.scenario.earth_radius_km,
                "rng_seed": self.scenario.rng_seed,
            },
            "arrays": {
                "m_x": self.arrays.m_x, "m_y": self.arrays.m_y,
                "n_x": self.arrays.n_x, "n_y": self.arrays.n_y,
                "d_x": self.arrays.d_x, "d_y": self.arrays.d_y,
                "d_ux": self.arrays.d_ux, "d_uy": self.arrays.d_uy,
                "carrier_frequency_hz": self.arrays.carrier_frequency_hz,
                "bandwidth_hz": self.arrays.bandwidth_hz,
                "noise_temperature_k": self.arrays.noise_temperature_k,
                "gain_sat_dbi": self.arrays.gain_sat_dbi,
                "gain_ut_dbi": self.arrays.gain_ut_dbi,
                "rician_table": list(self.arrays.rician_table),
            },
            "power_grid_dbw": list(self.power_grid_dbw),
            "satellite_grid": list(self.satellite_grid),
            "variants": list(self.variants),
            "mc_samples": self.mc_samples,
            "design_realizations": self.design_realizations,
            "num_drops": self.num_drops,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "power_dbw_for_sat_sweep": self.power_dbw_for_sat_sweep,
            "max_iters": self.max_iters,
            "rel_obj_tol": self.rel_obj_tol,
            "solver_tol": self.solver_tol,
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "ExperimentConfig":
        try:
            scenario = ScenarioConfig(**doc.get("scenario", {}))
            arrays_doc = dict(doc.get("arrays", {}))
            if "rician_table" in arrays_doc:
                arrays_doc["rician_table"] = tuple(arrays_doc["rician_table"])
            arrays = ArrayConfig(**arrays_doc)
            kwargs = {k: v for k, v in doc.items()
                      if k not in ("scenario", "arrays")}
            for key in ("power_grid_dbw", "satellite_grid", "variants"):
                if key in kwargs:
                    kwargs[key] = tuple(kwargs[key])
            return ExperimentConfig(scenario=scenario, arrays=arrays, **kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad experiment config: {exc}") from exc


@dataclass(frozen=True)
class ResultRow:
    sweep: str              # "power_dbw" | "num_satellites"
    sweep_value: float
    variant: str
    drop: int
    mmfr_ub: float          # bits/s/Hz, bound-space value at the returned design
    mmfr_true: float        # Monte Carlo estimate of the achieved MMFR
    mmfr_stderr: float
    iterations: int
    wall_time_s: float = 0.0

    def csv_line(self) -> str:
        return ",".join([
            self.sweep, repr(float(self.sweep_value)), self.variant,
            str(self.drop), repr(float(self.mmfr_ub)),
            repr(float(self.mmfr_true)), repr(float(self.mmfr_stderr)),
            str(self.iterations),
        ])


@dataclass
class ResultTable:
    rows: list[ResultRow] = field(default_factory=list)
    config: ExperimentConfig | None = None
    failures: list[dict] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        lines.extend(row.csv_line() for row in self.rows)
        return "\n".join(lines) + "\n"

    def summary(self) -> list[dict]:
        """Per (variant, sweep value) averages over drops."""
        keys = sorted({(r.variant, r.sweep, r.sweep_value) for r in self.rows})
        out = []
        for variant, sweep, value in keys:
            sel = [r for r in self.rows
                   if r.variant == variant and r.sweep_value == value]
            true_vals = np.array([r.mmfr_true for r in sel])
            ub_vals = np.array([r.mmfr_ub for r in sel])
            if len(sel) > 1:
                spread = true_vals.std(ddof=1) / math.sqrt(len(sel))
            else:
                spread = sel[0].mmfr_stderr
            out.append({
                "variant": variant, "sweep": sweep, "sweep_value": value,
                "mmfr_true": float(true_vals.mean()),
                "mmfr_ub": float(ub_vals.mean()),
                "stderr": float(spread), "drops": len(sel),
            })
        return out


def parse_csv(text: str) -> list[ResultRow]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"unexpected results header: {lines[:1]!r}")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        rows.append(ResultRow(
            sweep=parts[0], sweep_value=float(parts[1]), variant=parts[2],
            drop=int(parts[3]), mmfr_ub=float(parts[4]),
            mmfr_true=float(parts[5]), mmfr_stderr=float(parts[6]),
            iterations=int(parts[7])))
    return rows


def persist(table: ResultTable, path) -> tuple[Path, Path]:
    """Write results CSV plus a JSON sidecar with config, seed, and timings."""
    csv_path = Path(path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    try:
        csv_path.write_text(table.to_csv())
        sidecar = csv_path.with_suffix(".sidecar.json")
        sidecar.write_text(json.dumps({
            "schema": SIDECAR_SCHEMA,
            "version": __version__,
            "seed": table.config.seed if table.config else None,
            "config": table.config.to_json_dict() if table.config else None,
            "wall_times_s": [row.wall_time_s for row in table.rows],
            "failures": table.failures,
        }, indent=2))
    except OSError as exc:
        raise OSError(f"cannot persist results at {csv_path}: {exc}") from exc
    return csv_path, sidecar


def load(path) -> ResultTable:
    csv_path = Path(path)
    try:
        rows = parse_csv(csv_path.read_text())
        sidecar_path = csv_path.with_suffix(".sidecar.json")
        doc = json.loads(sidecar_path.read_text())
    except OSError as exc:
        raise OSError(f"cannot load results at {csv_path}: {exc}") from exc
    if doc.get("schema") != SIDECAR_SCHEMA:
        raise ValueError(f"unknown sidecar schema {doc.get('schema')!r}")
    wall = doc.get("wall_times_s", [])
    rows = [replace(row, wall_time_s=w) for row, w in
            zip(rows, list(wall) + [0.0] * (len(rows) - len(wall)))]
    config = (ExperimentConfig.from_json_dict(doc["config"])
              if doc.get("config") else None)
    table = ResultTable(rows=rows, config=config,
                        failures=doc.get("failures", []))
    return table


# ---------------------------------------------------------------------------
# sweep execution

def _cell_seed(base_seed: int, sweep_id: int, value_idx: int, drop: int,
               stream: int) -> np.random.Generator:
    seq = np.random.SeedSequence(base_seed,
                                 spawn_key=(sweep_id, value_idx, drop, stream))
    return np.random.default_rng(seq)


def _prepare_drop(config: ExperimentConfig, num_sats: int, sweep_id: int,
                  value_idx: int, drop: int):
    scen_seed = int(_cell_seed(config.seed, sweep_id, value_idx, drop, 0)
                    .integers(0, 2**63 - 1))
    scen_cfg = replace(config.scenario, num_satellites=num_sats,
                       rng_seed=scen_seed)
    scenario = build_scenario(scen_cfg)
    stats_rng = _cell_seed(config.seed, sweep_id, value_idx, drop, 1)
    stats = build_link_statistics(scenario, config.arrays, stats_rng)
    sigma2 = noise_variance(config.arrays.noise_temperature_k,
                            config.arrays.bandwidth_hz)
    stats_n = [[ls.scaled(1.0 / sigma2) for ls in row] for row in stats]
    inputs = DesignInputs(
        stats=stats_n,
        mask=scenario.association_mask(),
        nearest_sat=np.argmin(scenario.distances_km, axis=1),
        m_per_sat=config.arrays.num_sat_antennas)
    return inputs


def _true_bound_mmfr(inputs: DesignInputs, result: VariantResult) -> float:
    """Bound-space max-min value of the returned design under true statistics."""
    channels = [effective_channel(row).h_hat for row in inputs.stats]
    if result.precoder is not None:
        f_c, f_p = instantaneous_rates(channels, result.precoder.q, 1.0)
        if result.variant.startswith("sdma"):
            f_c = np.zeros_like(f_c)
        return allocate_common_rate(f_c, f_p)[1]
    grouped = result.grouped
    stacked = np.concatenate([grouped.common_columns, grouped.q_private],
                             axis=1)
    num_groups = grouped.common_columns.shape[1]
    f_c = np.empty(inputs.num_uts)
    f_p = np.empty(inputs.num_uts)
    for k, ch in enumerate(channels):
        b = ch @ stacked
        gram = b.conj().T @ b
        f_c[k], f_p[k] = grouped_rates_from_gram(gram, 1.0, k,
                                                 grouped.group_of_ut,
                                                 num_groups)
    if result.variant.startswith("sdma"):
        f_c = np.zeros_like(f_c)
    alloc = np.zeros(inputs.num_uts)
    for g in range(num_groups):
        members = np.flatnonzero(grouped.group_of_ut == g)
        if members.size:
            alloc[members] = allocate_common_rate(f_c[members], f_p[members])[0]
    return float(np.min(alloc + f_p))


def _mmfr_stderr(report: RateReport) -> float:
    k_star = int(np.argmin(report.common_alloc + report.f_private))
    err = report.stderr_private[k_star] ** 2
    if report.common_alloc.sum() > 1e-12:
        j_star = int(np.argmin(report.f_common))
        err += report.stderr_common[j_star] ** 2
    return math.sqrt(err)


def _evaluate_cell(config: ExperimentConfig, inputs: DesignInputs,
                   variant: str, power_w: float, sweep_id: int,
                   value_idx: int, drop: int,
                   warm_start=None) -> tuple[ResultRow, object]:
    settings = OptimizerSettings(
        power_budget_w=power_w, variant=variant, max_iters=config.max_iters,
        rel_obj_tol=config.rel_obj_tol, solver_tol=config.solver_tol)
    design_rng = _cell_seed(config.seed, sweep_id, value_idx, drop, 2)
    t0 = time.perf_counter()
    result = optimize_variant(inputs, settings, rng=design_rng,
                              design_realizations=config.design_realizations)
    if warm_start is not None and result.precoder is not None:
        channels = [effective_channel(row).h_hat for row in inputs.stats]
        bases = basis_from_transmit_responses(inputs.stats)
        warmed = wmmse_optimize(channels, inputs.mask, settings,
                                bases=bases, q_init=warm_start,
                                include_common=settings.scheme == "rsma")
        if warmed.objective > result.design_objective:
            result = VariantResult(
                variant=variant, precoder=warmed.precoder, grouped=None,
                traces=[warmed.trace], design_objective=warmed.objective,
                iterations=warmed.iterations)
    mc_rng = _cell_seed(config.seed, sweep_id, value_idx, drop, 3)
    if result.icsi_mmfrs is not None:
        mmfr_true = float(result.icsi_mmfrs.mean())
        stderr = float(result.icsi_mmfrs.std(ddof=1)
                       / math.sqrt(result.icsi_mmfrs.size))
        mmfr_ub = mmfr_true
    elif result.precoder is not None:
        report = ergodic_rates_mc(inputs.stats, result.precoder.q, 1.0,
                                  config.mc_samples, mc_rng)
        if variant.startswith("sdma"):
            alloc, mmfr = allocate_common_rate(
                np.zeros(inputs.num_uts), report.f_private)
            report = replace(report, common_alloc=alloc, mmfr=mmfr)
        mmfr_true = report.mmfr
        stderr = _mmfr_stderr(report)
        mmfr_ub = _true_bound_mmfr(inputs, result)
    else:
        grouped = result.grouped
        common = grouped.common_columns
        if variant.startswith("sdma"):
            common = np.zeros_like(common)
        report = grouped_ergodic_rates_mc(
            inputs.stats, common, grouped.q_private, grouped.group_of_ut,
            1.0, config.mc_samples, mc_rng)
        mmfr_true = report.mmfr
        stderr = _mmfr_stderr(report)
        mmfr_ub = _true_bound_mmfr(inputs, result)
    sweep_name = "power_dbw" if sweep_id == 0 else "num_satellites"
    value = (10.0 * math.log10(power_w) if sweep_id == 0
             else inputs.num_sats)
    row = ResultRow(
        sweep=sweep_name, sweep_value=float(value), variant=variant,
        drop=drop, mmfr_ub=float(mmfr_ub), mmfr_true=float(mmfr_true),
        mmfr_stderr=float(stderr), iterations=result.iterations,
        wall_time_s=time.perf_counter() - t0)
    carry = result.precoder if result.precoder is not None else None
    return row, carry


def run_power_sweep(config: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Average MMFR versus per-satellite transmit power.

    Within a drop the power grid is processed in ascending order and each
    design is also warm-started from the previous power's solution, keeping
    whichever ends higher; the feasible set only grows with power, so the
    design objective is non-decreasing along the grid by construction.
    """
    order = np.argsort(config.power_grid_dbw)
    table = ResultTable(config=config)

    def run_drop(drop: int) -> list[ResultRow]:
        rows = []
        carries: dict[str, object] = {}
        # one scenario per drop, shared by the whole power grid: the larger
        # budget strictly enlarges the feasible set on the same instance
        inputs = _prepare_drop(config, config.scenario.num_satellites,
                               0, 0, drop)
        for value_idx in order:
            p_dbw = config.power_grid_dbw[value_idx]
            for variant in config.variants:
                try:
                    row, carry = _evaluate_cell(
                        config, inputs, variant, 10 ** (p_dbw / 10.0), 0,
                        int(value_idx), drop, warm_start=carries.get(variant))
                    rows.append(row)
                    if carry is not None:
                        carries[variant] = carry
                except Exception as exc:  # noqa: BLE001 - recorded, run continues
                    table.failures.append({
                        "sweep_value": p_dbw, "variant": variant,
                        "drop": drop, "error": repr(exc)})
        return rows

    drop_rows = _run_drops(run_drop, config.num_drops, workers)
    table.rows = _sorted_rows(drop_rows)
    return table


def run_satellite_sweep(config: ExperimentConfig,
                        workers: int = 1) -> ResultTable:
    """Average MMFR versus the number of cooperating satellites."""
    table = ResultTable(config=config)
    power_w = 10 ** (config.power_dbw_for_sat_sweep / 10.0)

    def run_drop(drop: int) -> list[ResultRow]:
        rows = []
        for value_idx, num_sats in enumerate(config.satellite_grid):
            inputs = _prepare_drop(config, int(num_sats), 1, value_idx, drop)
            for variant in config.variants:
                try:
                    row, _ = _evaluate_cell(config, inputs, variant, power_w,
                                            1, value_idx, drop)
                    rows.append(row)
                except Exception as exc:  # noqa: BLE001
                    table.failures.append({
                        "sweep_value": int(num_sats), "variant": variant,
                        "drop": drop, "error": repr(exc)})
        return rows

    drop_rows = _run_drops(run_drop, config.num_drops, workers)
    table.rows = _sorted_rows(drop_rows)
    return table


def _run_drops(run_drop, num_drops: int, workers: int) -> list[list[ResultRow]]:
    if workers <= 1:
        return [run_drop(d) for d in range(num_drops)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_drop, range(num_drops)))


def _sorted_rows(drop_rows: list[list[ResultRow]]) -> list[ResultRow]:
    rows = [row for chunk in drop_rows for row in chunk]
    return sorted(rows, key=lambda r: (r.sweep, r.sweep_value, r.drop,
                                       r.variant))
