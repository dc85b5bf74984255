import math

import numpy as np
import pytest

from leo_rsma import channel, rates, socp, wmmse


def toy_array_config():
    return channel.ArrayConfig(m_x=2, m_y=2, n_x=2, n_y=2)


def make_stats(rng, num_uts, num_sats, kappa=None, beta_scale=1.0):
    cfg = toy_array_config()
    table = []
    for _ in range(num_uts):
        row = []
        for _ in range(num_sats):
            row.append(channel.LinkStatistics(
                beta=beta_scale * rng.uniform(0.7, 1.4),
                kappa=kappa if kappa else rng.uniform(2.0, 25.0),
                g=channel.transmit_response(rng.uniform(0, math.pi),
                                            rng.uniform(0, math.pi), cfg),
                d0=channel.los_receive_response(rng.uniform(30, 90), cfg, rng),
                sigma=channel.nlos_covariance(4, rng),
            ))
        table.append(row)
    return table


def design_inputs(rng, num_uts, num_sats, mask=None, kappa=None,
                  beta_scale=1.0):
    stats = make_stats(rng, num_uts, num_sats, kappa, beta_scale)
    if mask is None:
        mask = np.ones((num_sats, num_uts), dtype=bool)
    return wmmse.DesignInputs(
        stats=stats, mask=np.asarray(mask, dtype=bool),
        nearest_sat=np.zeros(num_uts, dtype=int), m_per_sat=4)


def channels_of(inputs):
    return [channel.effective_channel(row).h_hat for row in inputs.stats]


# ---------------------------------------------------------------------------
# power accounting

def test_per_satellite_power_zero():
    assert wmmse.per_satellite_power(np.zeros((8, 3), dtype=complex), 0, 4) == 0


def test_per_satellite_power_single_entry():
    q = np.zeros((8, 3), dtype=complex)
    q[5, 1] = 2.0
    assert wmmse.per_satellite_power(q, 1, 4) == pytest.approx(4.0)
    assert wmmse.per_satellite_power(q, 0, 4) == 0.0


def test_per_satellite_power_matches_brute_force():
    rng = np.random.default_rng(0)
    q = rng.normal(size=(12, 4)) + 1j * rng.normal(size=(12, 4))
    for s in range(3):
        manual = sum(abs(q[i, j]) ** 2
                     for i in range(4 * s, 4 * (s + 1)) for j in range(4))
        assert wmmse.per_satellite_power(q, s, 4) == pytest.approx(manual)


# ---------------------------------------------------------------------------
# initialization

def test_initialize_precoder_feasible_and_masked():
    rng = np.random.default_rng(1)
    mask = np.array([[True, False], [True, True]])
    inputs = design_inputs(rng, 2, 2, mask=mask)
    pm = wmmse.initialize_precoder(channels_of(inputs), mask, 5.0, 4)
    powers = wmmse.satellite_powers(pm.q, 4)
    assert np.allclose(powers, 5.0 * (1 - 1e-6), rtol=1e-9)
    assert np.all(pm.q[0:4, 2] == 0)  # satellite 0 does not serve UT 1


def test_initialize_precoder_single_user_matches_response():
    rng = np.random.default_rng(2)
    inputs = design_inputs(rng, 1, 1)
    pm = wmmse.initialize_precoder(channels_of(inputs), inputs.mask, 2.0, 4)
    g = inputs.stats[0][0].g
    for col in range(2):
        overlap = abs(np.vdot(g, pm.q[:, col])) / np.linalg.norm(pm.q[:, col])
        assert overlap == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------------------
# subproblem

def encode_point(sub, q, r_common, r_private, t):
    x = np.zeros(sub.program.num_vars)
    for col, placements in enumerate(sub.column_blocks):
        for s, sl in placements:
            rows = slice(s * sub.m_per_sat, (s + 1) * sub.m_per_sat)
            x[sl] = socp.interleave_complex(sub.bases[s].conj().T @ q[rows, col])
    if sub.include_common:
        x[sub.program.blocks["r_common"]] = r_common
    x[sub.program.blocks["r_private"]] = r_private
    x[sub.program.blocks["t"]] = t
    return x


def test_subproblem_plugin_feasibility():
    # at the closed-form (u, v) of Q0, Q0 with its bound rates is feasible
    rng = np.random.default_rng(3)
    inputs = design_inputs(rng, 3, 2)
    chans = channels_of(inputs)
    pm = wmmse.initialize_precoder(chans, inputs.mask, 4.0, 4)
    comb = rates.optimal_combiners_weights(pm.q, chans, 1.0)
    sub = wmmse.build_subproblem(comb, chans, inputs.mask, 4.0, 1.0)
    f_c, f_p = rates.rate_upper_bounds(chans, pm.q, 1.0)
    r_c = np.full(3, f_c.min() / 3.0)
    t = float(np.min(r_c + f_p))
    x0 = encode_point(sub, pm.q, r_c, f_p, t)
    prog = sub.program
    slack = prog.h - prog.g @ x0
    assert socp.interior_margin(slack, prog.cones) >= -1e-8
    if prog.a_eq.size:
        assert np.max(np.abs(prog.a_eq @ x0 - prog.b_eq)) <= 1e-9


def test_subproblem_masked_entries_exact_zero():
    rng = np.random.default_rng(4)
    mask = np.array([[True, True, False], [False, True, True]])
    inputs = design_inputs(rng, 3, 2, mask=mask)
    chans = channels_of(inputs)
    pm = wmmse.initialize_precoder(chans, mask, 3.0, 4)
    comb = rates.optimal_combiners_weights(pm.q, chans, 1.0)
    sub = wmmse.build_subproblem(comb, chans, mask, 3.0, 1.0)
    sol = socp.solve(sub.program)
    pm_new, _, _, _ = sub.extract(sol.x)
    assert np.all(pm_new.q[4:8, 1] == 0)   # sat 1 does not serve UT 0
    assert np.all(pm_new.q[0:4, 3] == 0)   # sat 0 does not serve UT 2


def test_subproblem_single_user_closed_form():
    rng = np.random.default_rng(5)
    inputs = design_inputs(rng, 1, 1)
    chans = channels_of(inputs)
    beta = inputs.stats[0][0].beta
    power = 6.0
    pm = wmmse.initialize_precoder(chans, inputs.mask, power, 4)
    comb = rates.optimal_combiners_weights(pm.q, chans, 1.0)
    sub = wmmse.build_subproblem(comb, chans, inputs.mask, power, 1.0)
    sol = socp.solve(sub.program)
    _, _, _, t = sub.extract(sol.x)
    assert t == pytest.approx(math.log2(1 + beta * power), abs=1e-4)


# ---------------------------------------------------------------------------
# full optimization

def test_wmmse_single_user_closed_form():
    lam = channel.SPEED_OF_LIGHT / 2e9
    beta = channel.path_gain(600e3, lam, 6.0, 0.0)
    sigma2 = channel.noise_variance(290.0, 50e6)
    power = 10 ** 1.5
    rng = np.random.default_rng(6)
    cfg = channel.ArrayConfig()
    ls = channel.LinkStatistics(
        beta=beta / sigma2, kappa=10.0,
        g=channel.transmit_response(0.4, 0.9, cfg),
        d0=channel.los_receive_response(55.0, cfg, rng),
        sigma=channel.nlos_covariance(16, rng))
    chans = [channel.effective_channel([ls]).h_hat]
    settings = wmmse.OptimizerSettings(power_budget_w=power)
    result = wmmse.wmmse_optimize(chans, np.ones((1, 1), dtype=bool), settings)
    expected = math.log2(1 + (beta / sigma2) * power)
    assert result.objective == pytest.approx(expected, abs=1e-3)
    assert result.converged


def test_wmmse_symmetric_users():
    # two UTs with identical statistics end up with equal rates
    rng = np.random.default_rng(7)
    stats = make_stats(rng, 1, 1)
    stats = [stats[0], [stats[0][0]]]
    inputs = wmmse.DesignInputs(stats=stats,
                                mask=np.ones((1, 2), dtype=bool),
                                nearest_sat=np.zeros(2, dtype=int),
                                m_per_sat=4)
    chans = channels_of(inputs)
    settings = wmmse.OptimizerSettings(power_budget_w=4.0)
    result = wmmse.wmmse_optimize(chans, inputs.mask, settings)
    rate = result.r_common + result.r_private
    assert rate[0] == pytest.approx(rate[1], abs=1e-4)


def test_wmmse_monotone_feasible_random_instances():
    rng = np.random.default_rng(8)
    for trial in range(6):
        num_uts = int(rng.integers(2, 4))
        num_sats = int(rng.integers(1, 3))
        inputs = design_inputs(np.random.default_rng(100 + trial),
                               num_uts, num_sats)
        power = float(rng.uniform(2.0, 12.0))
        settings = wmmse.OptimizerSettings(power_budget_w=power, max_iters=25)
        result = wmmse.wmmse_optimize(channels_of(inputs), inputs.mask,
                                      settings)
        objs = result.trace.objectives
        assert all(b >= a - 10 * settings.solver_tol
                   for a, b in zip(objs, objs[1:]))
        powers = wmmse.satellite_powers(result.precoder.q, 4)
        assert np.all(powers <= power * (1 + 1e-8))


def test_wmmse_fixed_point_consistency():
    rng = np.random.default_rng(9)
    inputs = design_inputs(rng, 2, 2)
    chans = channels_of(inputs)
    settings = wmmse.OptimizerSettings(power_budget_w=5.0, max_iters=30)
    result = wmmse.wmmse_optimize(chans, inputs.mask, settings)
    # re-running the combiner update plus one block update at the converged
    # precoder changes the objective by less than the convergence tolerance
    again = wmmse.wmmse_optimize(chans, inputs.mask,
                                 wmmse.OptimizerSettings(
                                     power_budget_w=5.0, max_iters=1),
                                 q_init=result.precoder)
    assert again.objective >= result.objective - 1e-9
    assert abs(again.objective - result.objective) <= (
        5 * settings.rel_obj_tol * max(result.objective, 1e-12))


# ---------------------------------------------------------------------------
# variants

def test_variant_sdma_zero_common():
    rng = np.random.default_rng(10)
    inputs = design_inputs(rng, 2, 2)
    settings = wmmse.OptimizerSettings(power_budget_w=4.0, variant="sdma-scsi")
    result = wmmse.optimize_variant(inputs, settings)
    assert np.all(result.precoder.q[:, 0] == 0)


def test_variant_rsma_dominates_sdma():
    for trial in range(5):
        rng = np.random.default_rng(200 + trial)
        inputs = design_inputs(rng, 3, 2)
        power = float(rng.uniform(2.0, 15.0))
        rsma = wmmse.optimize_variant(inputs, wmmse.OptimizerSettings(
            power_budget_w=power, variant="rsma-scsi"))
        sdma = wmmse.optimize_variant(inputs, wmmse.OptimizerSettings(
            power_budget_w=power, variant="sdma-scsi"))
        assert rsma.design_objective >= sdma.design_objective - 1e-6


def test_variant_dcsi_designs_on_los_channel():
    rng = np.random.default_rng(11)
    inputs = design_inputs(rng, 2, 2)
    settings = wmmse.OptimizerSettings(power_budget_w=4.0, variant="rsma-dcsi")
    result = wmmse.optimize_variant(inputs, settings)
    assert result.precoder is not None
    powers = wmmse.satellite_powers(result.precoder.q, 4)
    assert np.all(powers <= 4.0 * (1 + 1e-8))


def test_variant_noncoop_structure():
    rng = np.random.default_rng(12)
    inputs = design_inputs(rng, 3, 2)
    inputs = wmmse.DesignInputs(stats=inputs.stats, mask=inputs.mask,
                                nearest_sat=np.array([0, 1, 1]),
                                m_per_sat=4)
    settings = wmmse.OptimizerSettings(power_budget_w=4.0,
                                       variant="rsma-noncoop")
    result = wmmse.optimize_variant(inputs, settings)
    grouped = result.grouped
    assert grouped is not None
    # each group's common column lives only in its satellite block
    assert np.all(grouped.common_columns[4:8, 0] == 0)
    assert np.all(grouped.common_columns[0:4, 1] == 0)
    # private columns live only on the owning satellite
    assert np.all(grouped.q_private[4:8, 0] == 0)
    assert np.all(grouped.q_private[0:4, 1] == 0)
    assert np.all(grouped.q_private[0:4, 2] == 0)
    for s, members in ((0, [0]), (1, [1, 2])):
        rows = slice(4 * s, 4 * (s + 1))
        power = (np.sum(np.abs(grouped.common_columns[rows]) ** 2)
                 + np.sum(np.abs(grouped.q_private[rows]) ** 2))
        assert power <= 4.0 * (1 + 1e-8)


def test_variant_icsi_matches_scsi_for_deterministic_channel():
    rng = np.random.default_rng(13)
    inputs = design_inputs(rng, 2, 1, kappa=1e12)
    power = 6.0
    scsi = wmmse.optimize_variant(inputs, wmmse.OptimizerSettings(
        power_budget_w=power, variant="rsma-scsi"))
    icsi = wmmse.optimize_variant(
        inputs, wmmse.OptimizerSettings(power_budget_w=power,
                                        variant="rsma-icsi"),
        rng=np.random.default_rng(14), design_realizations=3)
    assert icsi.design_objective == pytest.approx(scsi.design_objective,
                                                  abs=1e-3)


def test_variant_icsi_requires_rng():
    rng = np.random.default_rng(15)
    inputs = design_inputs(rng, 1, 1)
    with pytest.raises(ValueError):
        wmmse.optimize_variant(inputs, wmmse.OptimizerSettings(
            power_budget_w=1.0, variant="rsma-icsi"))


def test_settings_validation():
    with pytest.raises(ValueError):
        wmmse.OptimizerSettings(power_budget_w=0.0)
    with pytest.raises(ValueError):
        wmmse.OptimizerSettings(power_budget_w=1.0, variant="bogus")
    with pytest.raises(ValueError):
        wmmse.OptimizerSettings(power_budget_w=1.0, max_iters=0)


def test_iteration_trace_json():
    trace = wmmse.IterationTrace(objectives=[0.1, 0.2],
                                 sat_powers=[[1.0], [1.1]],
                                 solver_statuses=["optimal", "optimal"])
    doc = trace.to_json()
    assert "0.2" in doc and "optimal" in doc
