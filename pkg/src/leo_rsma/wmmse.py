"""Alternating WMMSE optimization of the max-min fairness precoder.

One optimization round alternates two block updates: closed-form MMSE
combiners and weights for a fixed precoder, then a second-order-cone program
over the precoder and rate variables for fixed combiners.  Each update cannot
decrease the common epigraph objective, so the bound objective ascends
monotonically (up to solver tolerance).

The precoder columns are optimized in a lossless per-satellite subspace: any
component of a satellite's precoder outside the span of that satellite's
transmit responses is invisible to every UT and only wastes transmit power,
so each M-antenna block is parametrized by at most K coordinates.  Masked
private blocks are excluded from the variable set entirely, which makes the
zero-structure exact by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import socp
from .channel import LinkStatistics, effective_channel
from .rates import (CombinerSet, PrecodingMatrix, allocate_common_rate,
                    instantaneous_rates, optimal_combiners_weights)

VARIANTS = ("rsma-scsi", "sdma-scsi", "rsma-dcsi", "sdma-dcsi",
            "rsma-noncoop", "sdma-noncoop", "rsma-icsi", "sdma-icsi")

INIT_POWER_MARGIN = 1e-6
LN2 = math.log(2.0)


@dataclass(frozen=True)
class OptimizerSettings:
    power_budget_w: float
    variant: str = "rsma-scsi"
    max_iters: int = 50
    rel_obj_tol: float = 1e-5
    solver_tol: float = 1e-7

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.rel_obj_tol <= 0 or self.solver_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.power_budget_w <= 0:
            raise ValueError("power budget must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def scheme(self) -> str:
        return self.variant.split("-")[0]

    @property
    def csi_mode(self) -> str:
        return self.variant.split("-")[1]


@dataclass
class IterationTrace:
    objectives: list[float] = field(default_factory=list)      # bits/s/Hz
    sat_powers: list[list[float]] = field(default_factory=list)  # W per iteration
    solver_statuses: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({
            "schema": "leo-rsma/iteration-trace/v1",
            "objectives": self.objectives,
            "sat_powers": self.sat_powers,
            "solver_statuses": self.solver_statuses,
        })


@dataclass(frozen=True)
class WmmseResult:
    precoder: PrecodingMatrix
    r_common: np.ndarray
    r_private: np.ndarray
    objective: float             # final epigraph value, bits/s/Hz
    trace: IterationTrace
    converged: bool
    iterations: int


class OptimizationError(RuntimeError):
    pass


def per_satellite_power(q: np.ndarray, s: int, m_per_sat: int) -> float:
    """Transmit power of satellite s: squared Frobenius norm of its block."""
    block = q[s * m_per_sat:(s + 1) * m_per_sat, :]
    return float(np.sum(np.abs(block) ** 2))


def satellite_powers(q: np.ndarray, m_per_sat: int) -> np.ndarray:
    num_sats = q.shape[0] // m_per_sat
    return np.array([per_satellite_power(q, s, m_per_sat)
                     for s in range(num_sats)])


# ---------------------------------------------------------------------------
# per-satellite precoder subspaces

def identity_basis(num_sats: int, m_per_sat: int) -> list[np.ndarray]:
    return [np.eye(m_per_sat, dtype=complex) for _ in range(num_sats)]


def basis_from_transmit_responses(stats: list[list[LinkStatistics]]
                                  ) -> list[np.ndarray]:
    """Orthonormal basis of span{g_{k,s}: k} per satellite."""
    num_uts = len(stats)
    num_sats = len(stats[0])
    bases = []
    for s in range(num_sats):
        mat = np.stack([stats[k][s].g for k in range(num_uts)], axis=1)
        u, sv, _ = np.linalg.svd(mat, full_matrices=False)
        rank = int(np.sum(sv > 1e-12 * sv[0])) if sv.size else 0
        bases.append(u[:, :max(rank, 1)])
    return bases


def initialize_precoder(channels: list[np.ndarray], mask: np.ndarray,
                        power_budget_w: float, m_per_sat: int
                        ) -> PrecodingMatrix:
    """Deterministic feasible start: matched filters at full satellite power.

    Private columns take the dominant eigenvector of the UT's channel Gram
    with masked blocks zeroed; the common column takes the dominant
    eigenvector of the summed Grams.  Every satellite block is then scaled to
    exactly (1 - 1e-6) of the power budget.
    """
    num_sats, num_uts = mask.shape
    dim = num_sats * m_per_sat
    q = np.zeros((dim, num_uts + 1), dtype=complex)
    gram_sum = np.zeros((dim, dim), dtype=complex)
    for k, ch in enumerate(channels):
        gram = ch.conj().T @ ch
        gram_sum += gram
        _, vecs = np.linalg.eigh(gram)
        col = vecs[:, -1].copy()
        for s in range(num_sats):
            if not mask[s, k]:
                col[s * m_per_sat:(s + 1) * m_per_sat] = 0.0
        if np.linalg.norm(col) < 1e-12:
            # matched filter vanished under the mask: spread over serving blocks
            for s in range(num_sats):
                if mask[s, k]:
                    col[s * m_per_sat:(s + 1) * m_per_sat] = 1.0
        q[:, k + 1] = col / np.linalg.norm(col)
    _, vecs = np.linalg.eigh(gram_sum)
    q[:, 0] = vecs[:, -1]

    target = power_budget_w * (1.0 - INIT_POWER_MARGIN)
    for s in range(num_sats):
        rows = slice(s * m_per_sat, (s + 1) * m_per_sat)
        p_s = float(np.sum(np.abs(q[rows, :]) ** 2))
        if p_s <= 0:
            raise OptimizationError(f"satellite {s} carries no stream")
        q[rows, :] *= math.sqrt(target / p_s)
    return PrecodingMatrix.from_array(q, mask, m_per_sat)


# ---------------------------------------------------------------------------
# subproblem construction

@dataclass
class Subproblem:
    program: socp.ConicProgram
    column_blocks: list[list[tuple[int, slice]]]  # per column: (satellite, var slice)
    bases: list[np.ndarray]
    mask: np.ndarray
    m_per_sat: int
    include_common: bool
    num_uts: int

    def extract(self, x: np.ndarray
                ) -> tuple[PrecodingMatrix, np.ndarray, np.ndarray, float]:
        num_sats = self.mask.shape[0]
        dim = num_sats * self.m_per_sat
        q = np.zeros((dim, self.num_uts + 1), dtype=complex)
        for col, placements in enumerate(self.column_blocks):
            for s, sl in placements:
                w = socp.deinterleave_complex(x[sl])
                rows = slice(s * self.m_per_sat, (s + 1) * self.m_per_sat)
                q[rows, col] += self.bases[s] @ w
        blocks = self.program.blocks
        if self.include_common:
            r_common = x[blocks["r_common"]].copy()
        else:
            r_common = np.zeros(self.num_uts)
        r_private = x[blocks["r_private"]].copy()
        t = float(x[blocks["t"]][0])
        return (PrecodingMatrix.from_array(q, self.mask, self.m_per_sat),
                r_common, r_private, t)


def build_subproblem(combiners: CombinerSet, channels: list[np.ndarray],
                     mask: np.ndarray, power_budget_w: float,
                     sigma2: float, bases: list[np.ndarray] | None = None,
                     include_common: bool = True) -> Subproblem:
    """Cast the fixed-combiner precoder update as a conic program.

    Variables are the per-satellite subspace coordinates of every active
    precoder column, the rate shares, and the epigraph level; each MSE
    constraint becomes one second-order cone through the squared-norm
    epigraph identity, and each satellite's power cap one Euclidean-norm
    cone.
    """
    num_sats, num_uts = mask.shape
    m_per_sat = channels[0].shape[1] // num_sats
    if bases is None:
        bases = identity_basis(num_sats, m_per_sat)

    builder = socp.ProgramBuilder()
    column_blocks: list[list[tuple[int, slice]]] = []
    for col in range(num_uts + 1):
        placements = []
        if col == 0 and not include_common:
            column_blocks.append(placements)
            continue
        for s in range(num_sats):
            if col > 0 and not mask[s, col - 1]:
                continue
            sl = builder.add_complex_block(f"q{col}s{s}", bases[s].shape[1])
            placements.append((s, sl))
        column_blocks.append(placements)
    if include_common:
        rc_slice = builder.add_block("r_common", num_uts)
    rp_slice = builder.add_block("r_private", num_uts)
    t_slice = builder.add_block("t", 1)
    n = builder.num_vars

    def column_row(coeff_blocks: dict[int, np.ndarray], col: int) -> np.ndarray:
        """Real row for Re/Im of ``sum_s a_s^H w_{col,s}`` given complex a_s."""
        re_row = np.zeros(n)
        im_row = np.zeros(n)
        for s, sl in column_blocks[col]:
            coef = coeff_blocks.get(s)
            if coef is None:
                continue
            lifted = socp.complex_rows_to_real(coef.conj()[None, :])
            re_row[sl] = lifted[0]
            im_row[sl] = lifted[1]
        return re_row, im_row

    def mse_cone(ut: int, target_col: int, interferer_cols: list[int],
                 u: np.ndarray, v: float, bound_rate_row: np.ndarray) -> None:
        a = channels[ut].conj().T @ u          # response seen through combiner
        coeffs = {s: bases[s].conj().T @ a[s * m_per_sat:(s + 1) * m_per_sat]
                  for s in range(num_sats)}
        rows = []
        consts = []
        re_row, im_row = column_row(coeffs, target_col)
        rows.extend([-re_row, -im_row])        # 1 - a^H w  (affine const 1)
        consts.extend([1.0, 0.0])
        for col in interferer_cols:
            re_row, im_row = column_row(coeffs, col)
            rows.extend([re_row, im_row])
            consts.extend([0.0, 0.0])
        u_norm_sq = float(np.vdot(u, u).real)
        bound_const = (1.0 + math.log(v)) / v - sigma2 * u_norm_sq
        builder.add_quadratic_leq(np.array(rows), np.array(consts),
                                  bound_rate_row, bound_const)

    for k in range(num_uts):
        if include_common:
            rate_row = np.zeros(n)
            rate_row[rc_slice] = -LN2 / combiners.v_common[k]
            mse_cone(k, 0, list(range(1, num_uts + 1)),
                     combiners.u_common[k], float(combiners.v_common[k]),
                     rate_row)
        rate_row = np.zeros(n)
        rate_row[rp_slice.start + k] = -LN2 / combiners.v_private[k]
        mse_cone(k, k + 1, [j + 1 for j in range(num_uts) if j != k],
                 combiners.u_private[k], float(combiners.v_private[k]),
                 rate_row)

    # per-satellite power: || all coordinates owned by satellite s || <= sqrt(P)
    sqrt_p = math.sqrt(power_budget_w)
    for s in range(num_sats):
        rows = [np.zeros(n)]
        rhs = [sqrt_p]
        for col in range(num_uts + 1):
            for s2, sl in column_blocks[col]:
                if s2 != s:
                    continue
                for idx in range(sl.start, sl.stop):
                    row = np.zeros(n)
                    row[idx] = -1.0
                    rows.append(row)
                    rhs.append(0.0)
        builder.add_soc(rows, rhs)

    # epigraph and nonnegativity rows
    orthant_rows = []
    orthant_rhs = []
    for k in range(num_uts):
        row = np.zeros(n)
        row[t_slice] = 1.0
        row[rp_slice.start + k] = -1.0
        if include_common:
            row[rc_slice.start + k] = -1.0
        orthant_rows.append(row)
        orthant_rhs.append(0.0)
    rate_slices = [rp_slice] + ([rc_slice] if include_common else [])
    for sl in rate_slices:
        for idx in range(sl.start, sl.stop):
            row = np.zeros(n)
            row[idx] = -1.0
            orthant_rows.append(row)
            orthant_rhs.append(0.0)
    builder.add_nonneg(orthant_rows, orthant_rhs)

    objective = np.zeros(n)
    objective[t_slice] = -1.0
    builder.set_objective(objective)
    return Subproblem(program=builder.build(), column_blocks=column_blocks,
                      bases=bases, mask=np.asarray(mask, dtype=bool),
                      m_per_sat=m_per_sat, include_common=include_common,
                      num_uts=num_uts)


def _enforce_power(pm: PrecodingMatrix, power_budget_w: float
                   ) -> PrecodingMatrix:
    """Project marginal solver violations back inside the power budget."""
    powers = satellite_powers(pm.q, pm.m_per_sat)
    worst = float(powers.max(initial=0.0))
    if worst <= power_budget_w:
        return pm
    scale = math.sqrt(power_budget_w / worst)
    return PrecodingMatrix.from_array(pm.q * scale, pm.mask, pm.m_per_sat)


def bound_objective(channels: list[np.ndarray], q: np.ndarray, sigma2: float,
                    include_common: bool
                    ) -> tuple[float, np.ndarray, np.ndarray]:
    """Exact bound-space max-min value of a precoder with optimal rate split."""
    f_c, f_p = instantaneous_rates(channels, q, sigma2)
    if not include_common:
        f_c = np.zeros_like(f_c)
    alloc, mmfr = allocate_common_rate(f_c, f_p)
    return mmfr, alloc, f_p


def _clip_to_budget(q: np.ndarray, m_per_sat: int,
                    power_budget_w: float) -> np.ndarray:
    out = np.array(q, dtype=complex)
    num_sats = out.shape[0] // m_per_sat
    for s in range(num_sats):
        rows = slice(s * m_per_sat, (s + 1) * m_per_sat)
        p_s = float(np.sum(np.abs(out[rows, :]) ** 2))
        if p_s > power_budget_w:
            out[rows, :] *= math.sqrt(power_budget_w / p_s)
    return out


def _match_power_profile(cand: np.ndarray, ref: np.ndarray,
                         m_per_sat: int) -> np.ndarray:
    """Rescale each satellite block of ``cand`` to the power profile of ``ref``."""
    out = np.array(cand, dtype=complex)
    for s in range(out.shape[0] // m_per_sat):
        rows = slice(s * m_per_sat, (s + 1) * m_per_sat)
        p_cand = float(np.sum(np.abs(out[rows, :]) ** 2))
        p_ref = float(np.sum(np.abs(ref[rows, :]) ** 2))
        if p_cand > 1e-12 * max(p_ref, 1e-12):
            out[rows, :] *= math.sqrt(p_ref / p_cand)
    return out


PREDICTION_GAMMA = 3.0


def wmmse_optimize(channels: list[np.ndarray], mask: np.ndarray,
                   settings: OptimizerSettings, *, sigma2: float = 1.0,
                   bases: list[np.ndarray] | None = None,
                   q_init: PrecodingMatrix | None = None,
                   include_common: bool | None = None) -> WmmseResult:
    """Alternate combiner/weight updates with conic precoder updates.

    Two safeguarded accelerations shorten the method's slow tail without
    touching its ascent guarantee, since every candidate is accepted only if
    the exact bound objective improves: the combiner update may be evaluated
    at a point extrapolated along the previous precoder step, and cheap
    column-shrink probes retire precoder columns that the alternation would
    otherwise fade out over many rounds.  Stops when the relative objective
    change drops below ``settings.rel_obj_tol`` or no candidate improves.
    """
    mask = np.asarray(mask, dtype=bool)
    num_sats = mask.shape[0]
    num_uts = mask.shape[1]
    m_per_sat = channels[0].shape[1] // num_sats
    if include_common is None:
        include_common = settings.scheme == "rsma"
    pm = q_init if q_init is not None else initialize_precoder(
        channels, mask, settings.power_budget_w, m_per_sat)
    if not include_common and np.any(pm.q[:, 0] != 0):
        pm = PrecodingMatrix.from_array(
            np.concatenate([np.zeros_like(pm.q[:, :1]), pm.q[:, 1:]], axis=1),
            mask, m_per_sat)

    def solve_block_update(q_eval: np.ndarray) -> tuple[np.ndarray | None, str]:
        combiners = optimal_combiners_weights(q_eval, channels, sigma2)
        sub = build_subproblem(combiners, channels, mask,
                               settings.power_budget_w, sigma2, bases,
                               include_common)
        sol = socp.solve(sub.program, settings.solver_tol)
        if sol.status in ("infeasible", "unbounded"):
            raise OptimizationError(f"subproblem {sol.status}")
        if not np.all(np.isfinite(sol.x)):
            return None, sol.status
        # a stalled solve may still yield an ascent candidate; the exact
        # objective check below arbitrates either way
        pm_new, _, _, _ = sub.extract(sol.x)
        return _enforce_power(pm_new, settings.power_budget_w).q, sol.status

    trace = IterationTrace()
    objective, _, _ = bound_objective(channels, pm.q, sigma2, include_common)
    converged = False
    prev_q = None
    q = pm.q
    for iteration in range(settings.max_iters):
        prev_obj = objective
        q_next = None
        status = ""
        if prev_q is not None:
            predicted = _clip_to_budget(
                q + PREDICTION_GAMMA * (q - prev_q), m_per_sat,
                settings.power_budget_w)
            cand, status = solve_block_update(predicted)
            if cand is not None:
                cand_obj, _, _ = bound_objective(channels, cand, sigma2,
                                                 include_common)
                if cand_obj > objective:
                    q_next, objective = cand, cand_obj
        if q_next is None:
            cand, status = solve_block_update(q)
            if cand is not None:
                cand_obj, _, _ = bound_objective(channels, cand, sigma2,
                                                 include_common)
                if cand_obj > objective:
                    q_next, objective = cand, cand_obj
        if q_next is None:
            converged = True
            break
        # retire fading columns in one move instead of many partial updates
        improved = True
        while improved:
            improved = False
            for col in range(num_uts + 1):
                if col == 0 and not include_common:
                    continue
                for shrink in (0.0, 0.5):
                    cand = q_next.copy()
                    cand[:, col] *= shrink
                    cand = _match_power_profile(cand, q_next, m_per_sat)
                    cand_obj, _, _ = bound_objective(channels, cand, sigma2,
                                                     include_common)
                    if cand_obj > objective + 1e-12:
                        q_next, objective, improved = cand, cand_obj, True
        prev_q, q = q, q_next
        trace.objectives.append(objective)
        trace.sat_powers.append(satellite_powers(q, m_per_sat).tolist())
        trace.solver_statuses.append(status)
        if abs(objective - prev_obj) <= (
                settings.rel_obj_tol * max(abs(prev_obj), 1e-12)):
            converged = True
            break
    pm = PrecodingMatrix.from_array(q, mask, m_per_sat)
    final_obj, alloc, f_p = bound_objective(channels, pm.q, sigma2,
                                            include_common)
    return WmmseResult(precoder=pm, r_common=alloc, r_private=f_p,
                       objective=final_obj, trace=trace, converged=converged,
                       iterations=max(len(trace.objectives), 1))


# ---------------------------------------------------------------------------
# design variants

@dataclass(frozen=True)
class GroupedPrecoder:
    """Independent per-satellite designs: one common stream per group."""
    common_columns: np.ndarray    # (MS, G)
    q_private: np.ndarray         # (MS, K)
    group_of_ut: np.ndarray       # (K,) group index per UT
    group_sat: np.ndarray         # (G,) owning satellite per group


@dataclass(frozen=True)
class DesignInputs:
    """Noise-normalized statistics plus the association structure."""
    stats: list[list[LinkStatistics]]   # betas already divided by sigma_z^2
    mask: np.ndarray                    # (S, K)
    nearest_sat: np.ndarray             # (K,)
    m_per_sat: int

    @property
    def num_uts(self) -> int:
        return len(self.stats)

    @property
    def num_sats(self) -> int:
        return self.mask.shape[0]


@dataclass(frozen=True)
class VariantResult:
    variant: str
    precoder: PrecodingMatrix | None
    grouped: GroupedPrecoder | None
    traces: list[IterationTrace]
    design_objective: float            # bound-space value seen by the optimizer
    iterations: int
    icsi_mmfrs: np.ndarray | None = None


def optimize_variant(inputs: DesignInputs, settings: OptimizerSettings,
                     rng: np.random.Generator | None = None,
                     design_realizations: int = 50) -> VariantResult:
    """Dispatch one design variant on shared inputs.

    sCSI designs use the surrogate channel; dCSI designs replace each link's
    average power with its LoS share at design time; non-cooperative designs
    solve one single-satellite problem per nearest-UT group; iCSI designs
    optimize per sampled realization and summarize the per-realization
    max-min rates.
    """
    mode = settings.csi_mode
    if mode == "scsi":
        channels = [effective_channel(row).h_hat for row in inputs.stats]
        return _run_coop(inputs, settings, channels)
    if mode == "dcsi":
        channels = [effective_channel(row, los_diagonal=True).h_hat
                    for row in inputs.stats]
        return _run_coop(inputs, settings, channels)
    if mode == "noncoop":
        return _run_noncoop(inputs, settings)
    if mode == "icsi":
        if rng is None:
            raise ValueError("iCSI designs need an RNG for realizations")
        return _run_icsi(inputs, settings, rng, design_realizations)
    raise ValueError(f"unknown CSI mode {mode!r}")


def _run_coop(inputs: DesignInputs, settings: OptimizerSettings,
              channels: list[np.ndarray]) -> VariantResult:
    bases = basis_from_transmit_responses(inputs.stats)
    result = wmmse_optimize(channels, inputs.mask, settings, bases=bases)
    return VariantResult(variant=settings.variant, precoder=result.precoder,
                         grouped=None, traces=[result.trace],
                         design_objective=result.objective,
                         iterations=result.iterations)


def _run_noncoop(inputs: DesignInputs,
                 settings: OptimizerSettings) -> VariantResult:
    num_sats, num_uts = inputs.mask.shape
    m = inputs.m_per_sat
    dim = num_sats * m
    groups = []
    for s in range(num_sats):
        members = [k for k in range(num_uts) if inputs.nearest_sat[k] == s]
        if members:
            groups.append((s, members))
    common_cols = np.zeros((dim, len(groups)), dtype=complex)
    q_private = np.zeros((dim, num_uts), dtype=complex)
    group_of_ut = np.zeros(num_uts, dtype=int)
    traces = []
    objective = math.inf
    iters = 0
    for g, (s, members) in enumerate(groups):
        sub_stats = [[inputs.stats[k][s]] for k in members]
        channels = [effective_channel(row).h_hat for row in sub_stats]
        sub_mask = np.ones((1, len(members)), dtype=bool)
        bases = basis_from_transmit_responses(sub_stats)
        result = wmmse_optimize(channels, sub_mask, settings, bases=bases)
        rows = slice(s * m, (s + 1) * m)
        common_cols[rows, g] = result.precoder.q[:, 0]
        for j, k in enumerate(members):
            q_private[rows, k] = result.precoder.q[:, j + 1]
            group_of_ut[k] = g
        traces.append(result.trace)
        objective = min(objective, result.objective)
        iters = max(iters, result.iterations)
    grouped = GroupedPrecoder(common_columns=common_cols, q_private=q_private,
                              group_of_ut=group_of_ut,
                              group_sat=np.array([s for s, _ in groups]))
    return VariantResult(variant=settings.variant, precoder=None,
                         grouped=grouped, traces=traces,
                         design_objective=objective, iterations=iters)


def _run_icsi(inputs: DesignInputs, settings: OptimizerSettings,
              rng: np.random.Generator,
              design_realizations: int) -> VariantResult:
    from .channel import sample_realization

    bases = basis_from_transmit_responses(inputs.stats)
    mmfrs = np.empty(design_realizations)
    traces = []
    iters = 0
    for j in range(design_realizations):
        channels = [sample_realization(row, rng).h for row in inputs.stats]
        result = wmmse_optimize(channels, inputs.mask, settings, bases=bases)
        f_c, f_p = instantaneous_rates(channels, result.precoder.q, 1.0)
        if settings.scheme == "sdma":
            f_c = np.zeros_like(f_c)
        _, mmfrs[j] = allocate_common_rate(f_c, f_p)
        traces.append(result.trace)
        iters = max(iters, result.iterations)
    return VariantResult(variant=settings.variant, precoder=None, grouped=None,
                         traces=traces, design_objective=float(mmfrs.mean()),
                         iterations=iters, icsi_mmfrs=mmfrs)
