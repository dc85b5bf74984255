import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leo_rsma import channel, rates


def random_stats(rng, num_uts=2, num_sats=2, n=4, m=4, beta_scale=1.0):
    table = []
    cfg = channel.ArrayConfig(m_x=m, m_y=1, n_x=n, n_y=1)
    for _ in range(num_uts):
        row = []
        for _ in range(num_sats):
            row.append(channel.LinkStatistics(
                beta=beta_scale * rng.uniform(0.7, 1.4),
                kappa=rng.uniform(2.0, 25.0),
                g=channel.transmit_response(rng.uniform(0, math.pi),
                                            rng.uniform(0, math.pi), cfg),
                d0=channel.los_receive_response(rng.uniform(30, 90), cfg, rng),
                sigma=channel.nlos_covariance(n, rng),
            ))
        table.append(row)
    return table


def feasible_precoder(rng, num_sats, num_uts, m, power):
    q = rng.normal(size=(m * num_sats, num_uts + 1)) \
        + 1j * rng.normal(size=(m * num_sats, num_uts + 1))
    for s in range(num_sats):
        rows = slice(s * m, (s + 1) * m)
        p_s = np.sum(np.abs(q[rows, :]) ** 2)
        q[rows, :] *= math.sqrt(power / p_s)
    return q


# ---------------------------------------------------------------------------
# instantaneous rates

def test_rates_scalar_case():
    # h = 1, q_c = q_p = 1, sigma2 = 1: f_c = log2(1.5), f_p = 1
    h = np.array([[1.0 + 0j, ]])
    q = np.array([[1.0 + 0j, 1.0 + 0j]])
    f_c, f_p = rates.instantaneous_rates([h], q, 1.0)
    assert f_c[0] == pytest.approx(math.log2(1.5), abs=1e-12)
    assert f_p[0] == pytest.approx(1.0, abs=1e-12)


def test_rates_zero_common():
    rng = np.random.default_rng(0)
    h = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    q = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
    q[:, 0] = 0.0
    f_c, _ = rates.instantaneous_rates([h, h], q, 1.0)
    assert np.allclose(f_c, 0.0)


def test_rates_match_direct_logdet():
    # determinant-lemma form equals the full log-det formula
    rng = np.random.default_rng(1)
    num_uts, n, mdim = 3, 4, 6
    hs = [rng.normal(size=(n, mdim)) + 1j * rng.normal(size=(n, mdim))
          for _ in range(num_uts)]
    q = rng.normal(size=(mdim, num_uts + 1)) + 1j * rng.normal(size=(mdim, num_uts + 1))
    sigma2 = 0.7
    f_c, f_p = rates.instantaneous_rates(hs, q, sigma2)
    for k, h in enumerate(hs):
        b = h @ q
        cov_c = b[:, 1:] @ b[:, 1:].conj().T + sigma2 * np.eye(n)
        sig_c = np.outer(b[:, 0], b[:, 0].conj())
        _, fc_direct = np.linalg.slogdet(np.eye(n) + np.linalg.solve(cov_c, sig_c))
        others = [j for j in range(1, num_uts + 1) if j != k + 1]
        cov_p = b[:, others] @ b[:, others].conj().T + sigma2 * np.eye(n)
        sig_p = np.outer(b[:, k + 1], b[:, k + 1].conj())
        _, fp_direct = np.linalg.slogdet(np.eye(n) + np.linalg.solve(cov_p, sig_p))
        assert f_c[k] == pytest.approx(fc_direct / math.log(2), rel=1e-9)
        assert f_p[k] == pytest.approx(fp_direct / math.log(2), rel=1e-9)


def test_rates_reject_bad_noise():
    h = np.eye(2, dtype=complex)
    q = np.eye(2, 3, dtype=complex)
    with pytest.raises(ValueError):
        rates.instantaneous_rates([h], q, 0.0)


@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
@settings(max_examples=25, deadline=None)
def test_rates_scale_invariance(seed, factor):
    # scaling channels by c and noise by c^2 leaves every rate unchanged
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    q = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
    base = rates.instantaneous_rates([h, h], q, 1.3)
    scaled = rates.instantaneous_rates([factor * h, factor * h], q,
                                       1.3 * factor**2)
    assert np.allclose(base[0], scaled[0], atol=1e-10)
    assert np.allclose(base[1], scaled[1], atol=1e-10)


# ---------------------------------------------------------------------------
# Monte Carlo ergodic rates

def test_mc_rates_deterministic_channel():
    rng = np.random.default_rng(2)
    stats = random_stats(rng, num_uts=2, num_sats=2)
    stats = [[channel.LinkStatistics(beta=ls.beta, kappa=1e12, g=ls.g,
                                     d0=ls.d0, sigma=ls.sigma)
              for ls in row] for row in stats]
    q = feasible_precoder(rng, 2, 2, 4, 10.0)
    report = rates.ergodic_rates_mc(stats, q, 1.0, 500,
                                    np.random.default_rng(3))
    hs = [channel.sample_realization(row, np.random.default_rng(4)).h
          for row in stats]
    f_c, f_p = rates.instantaneous_rates(hs, q, 1.0)
    assert np.allclose(report.f_common, f_c, rtol=1e-6)
    assert np.allclose(report.f_private, f_p, rtol=1e-6)
    assert np.all(report.stderr_common <= 1e-6)


def test_mc_rates_stderr_scaling():
    rng = np.random.default_rng(5)
    stats = random_stats(rng, num_uts=1, num_sats=1)
    q = feasible_precoder(rng, 1, 1, 4, 5.0)
    r1 = rates.ergodic_rates_mc(stats, q, 1.0, 2000, np.random.default_rng(6))
    r2 = rates.ergodic_rates_mc(stats, q, 1.0, 8000, np.random.default_rng(6))
    ratio = r1.stderr_private[0] / r2.stderr_private[0]
    assert ratio == pytest.approx(2.0, rel=0.25)


def test_mc_rates_match_naive_loop():
    rng = np.random.default_rng(7)
    stats = random_stats(rng, num_uts=2, num_sats=2)
    q = feasible_precoder(rng, 2, 2, 4, 8.0)
    n_samples = 64
    report = rates.ergodic_rates_mc(stats, q, 1.0, n_samples,
                                    np.random.default_rng(8))
    # naive re-implementation over the same stream of realizations
    for k, row in enumerate(stats):
        rng_k = np.random.default_rng(8)
        g_block = channel.block_transmit_map([ls.g for ls in row])
        # replay the per-UT stream: UT order matters, so skip earlier UTs
        for _ in range(k):
            channel.sample_receive_responses(stats[_], n_samples, rng_k)
        draws = channel.sample_receive_responses(row, n_samples, rng_k)
        f_c_vals = np.empty(n_samples)
        f_p_vals = np.empty(n_samples)
        for i in range(n_samples):
            h = draws[i] @ g_block.conj().T
            f_c, f_p = rates.instantaneous_rates([h], q[:, [0, k + 1]], 1.0)
            b_all = h @ q
            cov = (b_all[:, 1:] @ b_all[:, 1:].conj().T + np.eye(4))
            sinr_c = np.vdot(b_all[:, 0],
                             np.linalg.solve(cov, b_all[:, 0])).real
            f_c_vals[i] = math.log2(1 + sinr_c)
            others = [j for j in range(1, 3) if j != k + 1]
            cov_p = (b_all[:, others] @ b_all[:, others].conj().T + np.eye(4))
            sinr_p = np.vdot(b_all[:, k + 1],
                             np.linalg.solve(cov_p, b_all[:, k + 1])).real
            f_p_vals[i] = math.log2(1 + sinr_p)
        assert report.f_common[k] == pytest.approx(f_c_vals.mean(), rel=1e-9)
        assert report.f_private[k] == pytest.approx(f_p_vals.mean(), rel=1e-9)


def test_mc_rates_needs_samples():
    rng = np.random.default_rng(9)
    stats = random_stats(rng, num_uts=1, num_sats=1)
    q = feasible_precoder(rng, 1, 1, 4, 1.0)
    with pytest.raises(ValueError):
        rates.ergodic_rates_mc(stats, q, 1.0, 1, rng)


# ---------------------------------------------------------------------------
# upper bounds

def test_upper_bound_scalar_case():
    h = np.array([[1.0 + 0j]])
    q = np.array([[1.0 + 0j, 1.0 + 0j]])
    f_c, f_p = rates.rate_upper_bounds([h], q, 1.0)
    assert f_c[0] == pytest.approx(math.log2(1.5))
    assert f_p[0] == pytest.approx(1.0)


def test_jensen_dominance_random_instances():
    rng = np.random.default_rng(10)
    for trial in range(5):
        stats = random_stats(rng, num_uts=3, num_sats=2)
        q = feasible_precoder(rng, 2, 3, 4, 6.0)
        eff = [channel.effective_channel(row).h_hat for row in stats]
        ub_c, ub_p = rates.rate_upper_bounds(eff, q, 1.0)
        report = rates.ergodic_rates_mc(stats, q, 1.0, 4000,
                                        np.random.default_rng(100 + trial))
        assert np.all(ub_c >= report.f_common - 3 * report.stderr_common)
        assert np.all(ub_p >= report.f_private - 3 * report.stderr_private)


def test_deterministic_channel_tightness():
    rng = np.random.default_rng(11)
    stats = random_stats(rng, num_uts=2, num_sats=2)
    stats = [[channel.LinkStatistics(beta=ls.beta, kappa=1e12, g=ls.g,
                                     d0=ls.d0, sigma=ls.sigma)
              for ls in row] for row in stats]
    q = feasible_precoder(rng, 2, 2, 4, 12.0)
    eff = [channel.effective_channel(row).h_hat for row in stats]
    ub_c, ub_p = rates.rate_upper_bounds(eff, q, 1.0)
    hs = [channel.sample_realization(row, np.random.default_rng(12)).h
          for row in stats]
    f_c, f_p = rates.instantaneous_rates(hs, q, 1.0)
    assert np.allclose(ub_c, f_c, rtol=1e-6)
    assert np.allclose(ub_p, f_p, rtol=1e-6)


# ---------------------------------------------------------------------------
# MSE and combiners

def test_mse_zero_combiner():
    h = np.eye(2, dtype=complex)
    q = np.ones((2, 2), dtype=complex)
    assert rates.mse(np.zeros(2, dtype=complex), q, h, 1.0, "common") == \
        pytest.approx(1.0)


def test_mse_scalar_case():
    h = np.array([[1.0 + 0j]])
    q = np.array([[1.0 + 0j, 1.0 + 0j]])
    u = np.array([1.0 / 3.0 + 0j])
    assert rates.mse(u, q, h, 1.0, "common") == pytest.approx(2.0 / 3.0)


def test_mse_lower_bound_and_mmse_identity():
    # e >= 1/(1+SINR), equality at the optimal combiner
    rng = np.random.default_rng(13)
    h = rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))
    q = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    sigma2 = 0.9
    comb = rates.optimal_combiners_weights(q, [h, h], sigma2)
    f_c, f_p = rates.instantaneous_rates([h, h], q, sigma2)
    for k in range(2):
        e_c = rates.mse(comb.u_common[k], q, h, sigma2, "common")
        sinr_c = 2 ** f_c[k] - 1
        assert e_c == pytest.approx(1 / (1 + sinr_c), rel=1e-10)
        for _ in range(5):
            u_other = comb.u_common[k] + 0.1 * (
                rng.normal(size=3) + 1j * rng.normal(size=3))
            assert rates.mse(u_other, q, h, sigma2, "common") >= e_c - 1e-12
        e_p = rates.mse(comb.u_private[k], q, h, sigma2, k)
        sinr_p = 2 ** f_p[k] - 1
        assert e_p == pytest.approx(1 / (1 + sinr_p), rel=1e-10)


def test_combiners_scalar_case():
    h = np.array([[1.0 + 0j]])
    q = np.array([[1.0 + 0j, 1.0 + 0j]])
    comb = rates.optimal_combiners_weights(q, [h], 1.0)
    assert comb.u_common[0][0] == pytest.approx(1.0 / 3.0)
    assert comb.v_common[0] == pytest.approx(1.5)
    value = math.log(comb.v_common[0]) - comb.v_common[0] * rates.mse(
        comb.u_common[0], q, h, 1.0, "common") + 1.0
    assert value == pytest.approx(math.log(1.5), abs=1e-12)


def test_combiners_zero_common():
    h = np.array([[1.0 + 0j]])
    q = np.array([[0.0 + 0j, 1.0 + 0j]])
    comb = rates.optimal_combiners_weights(q, [h], 1.0)
    assert comb.u_common[0][0] == 0.0
    assert comb.v_common[0] == pytest.approx(1.0)
    assert rates.mse(comb.u_common[0], q, h, 1.0, "common") == pytest.approx(1.0)


def test_weight_update_tightness_and_local_optimality():
    rng = np.random.default_rng(14)
    for _ in range(10):
        h = rng.normal(size=(4, 6)) + 1j * rng.normal(size=(4, 6))
        q = rng.normal(size=(6, 4)) + 1j * rng.normal(size=(6, 4))
        sigma2 = 1.2
        comb = rates.optimal_combiners_weights(q, [h] * 3, sigma2)
        f_c, f_p = rates.instantaneous_rates([h] * 3, q, sigma2)
        for k, stream in ((0, "common"), (1, 1), (2, 2)):
            if stream == "common":
                u, v, f = comb.u_common[k], comb.v_common[k], f_c[k]
            else:
                u, v, f = comb.u_private[k], comb.v_private[k], f_p[k]
            e = rates.mse(u, q, h, sigma2, stream)
            value = math.log(v) - v * e + 1.0
            assert value == pytest.approx(f * math.log(2), abs=1e-9)
            for _ in range(4):
                du = rng.normal(size=4) + 1j * rng.normal(size=4)
                du *= 1e-3 / np.linalg.norm(du)
                dv = 1e-3 * rng.choice([-1.0, 1.0])
                v2 = v * (1 + dv)
                e2 = rates.mse(u + du, q, h, sigma2, stream)
                assert math.log(v2) - v2 * e2 + 1.0 <= value + 1e-12


# ---------------------------------------------------------------------------
# common-rate allocation

def test_allocation_example():
    alloc, mmfr = rates.allocate_common_rate(np.array([2.0, 2.5]),
                                             np.array([1.0, 3.0]))
    assert np.allclose(alloc, [2.0, 0.0], atol=1e-9)
    assert mmfr == pytest.approx(3.0, abs=1e-9)


def test_allocation_no_budget():
    alloc, mmfr = rates.allocate_common_rate(np.array([0.0, 1.0]),
                                             np.array([0.4, 0.9]))
    assert np.allclose(alloc, 0.0)
    assert mmfr == pytest.approx(0.4)


def test_allocation_symmetric():
    alloc, mmfr = rates.allocate_common_rate(np.array([2.0, 2.0]),
                                             np.array([1.0, 1.0]))
    assert np.allclose(alloc, [1.0, 1.0], atol=1e-9)
    assert mmfr == pytest.approx(2.0, abs=1e-9)


def brute_force_allocation(f_c, f_p, step=1e-3):
    budget = f_c.min()
    best = -1.0
    if len(f_p) == 2:
        grid = np.arange(0.0, budget + step, step)
        for a in grid:
            best = max(best, min(a + f_p[0], budget - a + f_p[1]))
        return best
    raise NotImplementedError


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_allocation_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    f_c = rng.uniform(0.0, 3.0, size=2)
    f_p = rng.uniform(0.0, 3.0, size=2)
    _, mmfr = rates.allocate_common_rate(f_c, f_p)
    assert mmfr == pytest.approx(brute_force_allocation(f_c, f_p), abs=2e-3)


@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
@settings(max_examples=30, deadline=None)
def test_allocation_invariants(seed, num_uts):
    rng = np.random.default_rng(seed)
    f_c = rng.uniform(0.0, 4.0, size=num_uts)
    f_p = rng.uniform(0.0, 4.0, size=num_uts)
    alloc, mmfr = rates.allocate_common_rate(f_c, f_p)
    assert np.all(alloc >= -1e-12)
    assert alloc.sum() <= f_c.min() + 1e-9
    assert mmfr == pytest.approx(np.min(alloc + f_p), abs=1e-12)


# ---------------------------------------------------------------------------
# precoding matrix and reports

def test_precoding_matrix_mask_enforcement():
    mask = np.array([[True, False], [True, True]])
    q = np.ones((4, 3), dtype=complex)
    pm = rates.PrecodingMatrix.from_array(q, mask, 2)
    assert np.all(pm.q[0:2, 2] == 0)
    assert np.all(pm.q[2:4, 2] == 1)
    with pytest.raises(ValueError):
        rates.PrecodingMatrix(q=np.ones((4, 3), dtype=complex), mask=mask,
                              m_per_sat=2)


def test_rate_report_round_trip():
    report = rates.RateReport(
        f_common=np.array([1.0, 2.0]), f_private=np.array([0.5, 0.25]),
        common_alloc=np.array([0.75, 0.25]), mmfr=0.5,
        stderr_common=np.array([0.01, 0.01]),
        stderr_private=np.array([0.02, 0.02]))
    back = rates.RateReport.from_json(report.to_json())
    assert np.allclose(back.f_common, report.f_common)
    assert back.mmfr == report.mmfr
    assert np.allclose(back.per_ut_rate, report.per_ut_rate)


def test_grouped_rates_single_group_matches_standard():
    rng = np.random.default_rng(15)
    stats = random_stats(rng, num_uts=2, num_sats=2)
    q = feasible_precoder(rng, 2, 2, 4, 6.0)
    standard = rates.ergodic_rates_mc(stats, q, 1.0, 600,
                                      np.random.default_rng(16))
    grouped = rates.grouped_ergodic_rates_mc(
        stats, q[:, :1], q[:, 1:], np.zeros(2, dtype=int), 1.0, 600,
        np.random.default_rng(16))
    assert np.allclose(grouped.f_common, standard.f_common, atol=1e-12)
    assert np.allclose(grouped.f_private, standard.f_private, atol=1e-12)
    assert grouped.mmfr == pytest.approx(standard.mmfr, abs=1e-12)
