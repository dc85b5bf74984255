"""Rate and MSE mathematics for the common/private stream model.

Every per-stream rate reduces, through the matrix determinant lemma, to
``log2(1 + SINR)`` with a quadratic-form SINR; SINRs are evaluated from the
stream Gram matrix ``(C Q)^H (C Q)`` through Cholesky factorizations of the
noise-regularized interference Gram, which stays positive definite for any
positive noise power.  The same code paths serve the deterministic surrogate
channel (bound rates), instantaneous channels, and batched Monte Carlo draws.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .channel import LinkStatistics, block_transmit_map, sample_receive_responses


@dataclass(frozen=True)
class PrecodingMatrix:
    """Stacked precoder: column 0 carries the common stream, column k UT k's."""
    q: np.ndarray            # (M*S, K+1) complex
    mask: np.ndarray         # (S, K) bool, True where satellite s serves UT k
    m_per_sat: int

    def __post_init__(self):
        num_sats, num_uts = self.mask.shape
        if self.q.shape != (self.m_per_sat * num_sats, num_uts + 1):
            raise ValueError(
                f"precoder shape {self.q.shape} inconsistent with mask "
                f"{self.mask.shape} and {self.m_per_sat} antennas per satellite")
        for s in range(num_sats):
            rows = slice(s * self.m_per_sat, (s + 1) * self.m_per_sat)
            for k in range(num_uts):
                if not self.mask[s, k] and np.any(self.q[rows, k + 1] != 0):
                    raise ValueError(
                        f"private column {k} has nonzero entries at "
                        f"non-serving satellite {s}")

    @property
    def num_sats(self) -> int:
        return self.mask.shape[0]

    @property
    def num_uts(self) -> int:
        return self.mask.shape[1]

    @property
    def q_common(self) -> np.ndarray:
        return self.q[:, 0]

    @property
    def q_private(self) -> np.ndarray:
        return self.q[:, 1:]

    def block(self, s: int) -> np.ndarray:
        """The M-row slice of the precoder owned by satellite s."""
        return self.q[s * self.m_per_sat:(s + 1) * self.m_per_sat, :]

    @staticmethod
    def from_array(q: np.ndarray, mask: np.ndarray, m_per_sat: int,
                   zero_masked: bool = True) -> "PrecodingMatrix":
        q = np.array(q, dtype=complex)
        if zero_masked:
            num_sats, num_uts = mask.shape
            for s in range(num_sats):
                rows = slice(s * m_per_sat, (s + 1) * m_per_sat)
                for k in range(num_uts):
                    if not mask[s, k]:
                        q[rows, k + 1] = 0.0
        return PrecodingMatrix(q=q, mask=np.asarray(mask, dtype=bool),
                               m_per_sat=m_per_sat)


@dataclass(frozen=True)
class CombinerSet:
    """Closed-form MMSE combiners and the matching MSE weights."""
    u_common: list[np.ndarray]
    u_private: list[np.ndarray]
    v_common: np.ndarray
    v_private: np.ndarray

    def __post_init__(self):
        if np.any(self.v_common <= 0) or np.any(self.v_private <= 0):
            raise ValueError("MSE weights must be positive")


@dataclass(frozen=True)
class RateReport:
    """Per-UT rates plus the max-min-optimal common-rate split."""
    f_common: np.ndarray         # (K,) common-decodable rate per UT, bits/s/Hz
    f_private: np.ndarray        # (K,)
    common_alloc: np.ndarray     # (K,) >= 0, sums to at most min(f_common)
    mmfr: float
    stderr_common: np.ndarray    # (K,) zero for closed-form evaluations
    stderr_private: np.ndarray   # (K,)

    def __post_init__(self):
        # the common budget is per decoding group; with one group (the
        # standard model) the allocation must fit under min f_common
        if abs(self.mmfr - np.min(self.common_alloc + self.f_private)) > 1e-9:
            raise ValueError("reported MMFR inconsistent with the allocation")

    @property
    def per_ut_rate(self) -> np.ndarray:
        return self.common_alloc + self.f_private

    def to_json(self) -> str:
        return json.dumps({
            "schema": "leo-rsma/rate-report/v1",
            "f_common": self.f_common.tolist(),
            "f_private": self.f_private.tolist(),
            "common_alloc": self.common_alloc.tolist(),
            "mmfr": self.mmfr,
            "stderr_common": self.stderr_common.tolist(),
            "stderr_private": self.stderr_private.tolist(),
        })

    @staticmethod
    def from_json(text: str) -> "RateReport":
        doc = json.loads(text)
        if doc.get("schema") != "leo-rsma/rate-report/v1":
            raise ValueError(f"unknown rate-report schema: {doc.get('schema')!r}")
        return RateReport(
            f_common=np.asarray(doc["f_common"]),
            f_private=np.asarray(doc["f_private"]),
            common_alloc=np.asarray(doc["common_alloc"]),
            mmfr=doc["mmfr"],
            stderr_common=np.asarray(doc["stderr_common"]),
            stderr_private=np.asarray(doc["stderr_private"]),
        )


# ---------------------------------------------------------------------------
# SINR core

def _quadratic_sinr(gram: np.ndarray, sigma2: float, signal: int,
                    interferers: list[int]) -> np.ndarray:
    """SINR of one stream against a set of interfering streams.

    ``gram`` is the (possibly batched) stream Gram matrix (CQ)^H (CQ).  Uses
    sigma2*I + Gram_interferers, positive definite by construction.
    """
    a_ss = np.real(gram[..., signal, signal])
    if not interferers:
        return a_ss / sigma2
    idx = np.asarray(interferers)
    sub = gram[..., idx[:, None], idx[None, :]]
    vec = gram[..., idx, signal]
    reg = sub + sigma2 * np.eye(len(interferers))
    chol = np.linalg.cholesky(reg)
    w = np.linalg.solve(chol, vec[..., None])[..., 0]
    reduced = np.sum(np.abs(w) ** 2, axis=-1)
    return (a_ss - reduced) / sigma2


def _gram(channel: np.ndarray, q: np.ndarray) -> np.ndarray:
    b = channel @ q
    return b.conj().T @ b


def rates_from_gram(gram: np.ndarray, sigma2: float, ut: int,
                    common_active: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """(f_common, f_private) for one UT from a (batched) Gram of [q_c, q_p...]."""
    num_streams = gram.shape[-1]
    privates = list(range(1, num_streams))
    if common_active:
        sinr_c = _quadratic_sinr(gram, sigma2, 0, privates)
        f_c = np.log2(1.0 + np.maximum(sinr_c, 0.0))
    else:
        f_c = np.zeros(gram.shape[:-2])
    own = ut + 1
    others = [j for j in privates if j != own]
    sinr_p = _quadratic_sinr(gram, sigma2, own, others)
    f_p = np.log2(1.0 + np.maximum(sinr_p, 0.0))
    return f_c, f_p


def instantaneous_rates(channels: list[np.ndarray], q: np.ndarray,
                        sigma2: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-UT common/private rates for known channel matrices.

    ``channels[k]`` maps the stacked transmit vector to UT k's observation
    space; any row dimension is accepted (instantaneous N-dim channels or the
    deterministic surrogate).
    """
    if sigma2 <= 0:
        raise ValueError("noise power must be positive")
    num_uts = len(channels)
    f_c = np.empty(num_uts)
    f_p = np.empty(num_uts)
    for k, ch in enumerate(channels):
        gram = _gram(ch, q)
        f_c[k], f_p[k] = rates_from_gram(gram, sigma2, k)
    return f_c, f_p


def rate_upper_bounds(channels: list[np.ndarray], q: np.ndarray,
                      sigma2: float) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form bound rates: instantaneous formulas on the surrogate channel."""
    return instantaneous_rates(channels, q, sigma2)


def ergodic_rates_mc(stats: list[list[LinkStatistics]], q: np.ndarray,
                     sigma2: float, n_samples: int,
                     rng: np.random.Generator) -> RateReport:
    """Sample-mean ergodic rates with per-UT standard errors.

    Rates depend on each draw only through the S x S Gram of the receive
    responses, so realizations are reduced before the SINR math.
    """
    if n_samples < 2:
        raise ValueError("need at least two Monte Carlo samples")
    num_uts = len(stats)
    f_c = np.empty(num_uts)
    f_p = np.empty(num_uts)
    se_c = np.empty(num_uts)
    se_p = np.empty(num_uts)
    for k, row in enumerate(stats):
        g_block = block_transmit_map([st.g for st in row])
        t_mat = g_block.conj().T @ q                       # (S, K+1)
        d = sample_receive_responses(row, n_samples, rng)  # (n, N, S)
        w = np.einsum("nis,nit->nst", d.conj(), d)
        gram = t_mat.conj().T @ w @ t_mat
        fc_k, fp_k = rates_from_gram(gram, sigma2, k)
        f_c[k] = fc_k.mean()
        f_p[k] = fp_k.mean()
        se_c[k] = fc_k.std(ddof=1) / math.sqrt(n_samples)
        se_p[k] = fp_k.std(ddof=1) / math.sqrt(n_samples)
    alloc, mmfr = allocate_common_rate(f_c, f_p)
    return RateReport(f_common=f_c, f_private=f_p, common_alloc=alloc,
                      mmfr=mmfr, stderr_common=se_c, stderr_private=se_p)


# ---------------------------------------------------------------------------
# MSE / WMMSE closed forms

def mse(u: np.ndarray, q: np.ndarray, channel: np.ndarray, sigma2: float,
        stream) -> float:
    """MSE of one stream under combiner ``u``.

    ``stream`` is ``"common"`` or the integer UT index of a private stream.
    """
    b = channel @ q
    if stream == "common":
        target = b[:, 0]
        interferers = b[:, 1:]
    else:
        target = b[:, stream + 1]
        interferers = np.delete(b[:, 1:], stream, axis=1)
    miss = 1.0 - np.vdot(u, target)
    interference = np.sum(np.abs(u.conj() @ interferers) ** 2)
    return float(abs(miss) ** 2 + interference + sigma2 * np.vdot(u, u).real)


def optimal_combiners_weights(q: np.ndarray, channels: list[np.ndarray],
                              sigma2: float) -> CombinerSet:
    """Per-stream MMSE combiners and weights v = 1/e.

    The private-stream normal matrix equals the common-stream interference
    covariance (all privates plus noise), so one Cholesky per UT covers both
    stream types, with a rank-one Sherman-Morrison update for the common one.
    """
    u_c: list[np.ndarray] = []
    u_p: list[np.ndarray] = []
    v_c = np.empty(len(channels))
    v_p = np.empty(len(channels))
    for k, ch in enumerate(channels):
        b = ch @ q
        b_c, b_p = b[:, 0], b[:, 1:]
        cov = b_p @ b_p.conj().T + sigma2 * np.eye(ch.shape[0])
        chol = np.linalg.cholesky(cov)
        sol = np.linalg.solve(chol.conj().T, np.linalg.solve(chol, b))
        w_c = sol[:, 0]
        sinr_c = np.vdot(b_c, w_c).real
        u_c.append(w_c / (1.0 + sinr_c))
        v_c[k] = 1.0 + sinr_c
        own = sol[:, k + 1]
        e_p = 1.0 - np.vdot(b[:, k + 1], own).real
        u_p.append(own)
        v_p[k] = 1.0 / e_p
    return CombinerSet(u_common=u_c, u_private=u_p, v_common=v_c, v_private=v_p)


# ---------------------------------------------------------------------------
# Common-rate allocation

def allocate_common_rate(f_common: np.ndarray, f_private: np.ndarray,
                         tol: float = 1e-12) -> tuple[np.ndarray, float]:
    """Split the common-rate budget to maximize the minimum per-UT rate.

    Water-fills by bisection on the target level: the budget is
    ``min_k f_common[k]`` and user k absorbs ``max(0, level - f_private[k])``.
    """
    f_c = np.asarray(f_common, dtype=float)
    f_p = np.asarray(f_private, dtype=float)
    if np.any(f_c < 0) or np.any(f_p < 0):
        raise ValueError("rates must be nonnegative")
    budget = float(f_c.min())
    lo = float(f_p.min())
    if budget <= 0:
        return np.zeros_like(f_p), lo
    hi = lo + budget
    scale = max(1.0, hi)
    while hi - lo > tol * scale:
        mid = 0.5 * (lo + hi)
        need = np.maximum(0.0, mid - f_p).sum()
        if need <= budget:
            lo = mid
        else:
            hi = mid
    alloc = np.maximum(0.0, lo - f_p)
    # hand out any bisection slack without disturbing the minimum
    spare = budget - alloc.sum()
    if spare > 0:
        alloc[int(np.argmin(f_p + alloc))] += spare
    mmfr = float(np.min(alloc + f_p))
    return alloc, mmfr


# ---------------------------------------------------------------------------
# Grouped streams (independent per-satellite transmissions)

def grouped_rates_from_gram(gram: np.ndarray, sigma2: float, ut: int,
                            group_of_ut: np.ndarray,
                            num_groups: int) -> tuple[np.ndarray, np.ndarray]:
    """Rates when each group runs its own common stream.

    Stream order in ``gram``: the ``num_groups`` group-common streams, then
    the K private streams.  UT k decodes its group's common stream first;
    every other group's streams stay interference throughout.
    """
    num_streams = gram.shape[-1]
    num_uts = num_streams - num_groups
    own_group = int(group_of_ut[ut])
    foreign_commons = [g for g in range(num_groups) if g != own_group]
    privates = [num_groups + j for j in range(num_uts)]
    sinr_c = _quadratic_sinr(gram, sigma2, own_group, foreign_commons + privates)
    others = foreign_commons + [p for p in privates if p != num_groups + ut]
    sinr_p = _quadratic_sinr(gram, sigma2, num_groups + ut, others)
    return (np.log2(1.0 + np.maximum(sinr_c, 0.0)),
            np.log2(1.0 + np.maximum(sinr_p, 0.0)))


def grouped_ergodic_rates_mc(stats: list[list[LinkStatistics]],
                             common_columns: np.ndarray, q_private: np.ndarray,
                             group_of_ut: np.ndarray, sigma2: float,
                             n_samples: int, rng: np.random.Generator
                             ) -> RateReport:
    """Monte Carlo rates and per-group common allocation for grouped streams."""
    num_groups = common_columns.shape[1]
    num_uts = len(stats)
    stacked = np.concatenate([common_columns, q_private], axis=1)
    f_c = np.empty(num_uts)
    f_p = np.empty(num_uts)
    se_c = np.empty(num_uts)
    se_p = np.empty(num_uts)
    for k, row in enumerate(stats):
        g_block = block_transmit_map([st.g for st in row])
        t_mat = g_block.conj().T @ stacked
        d = sample_receive_responses(row, n_samples, rng)
        w = np.einsum("nis,nit->nst", d.conj(), d)
        gram = t_mat.conj().T @ w @ t_mat
        fc_k, fp_k = grouped_rates_from_gram(gram, sigma2, k, group_of_ut,
                                             num_groups)
        f_c[k] = fc_k.mean()
        f_p[k] = fp_k.mean()
        se_c[k] = fc_k.std(ddof=1) / math.sqrt(n_samples)
        se_p[k] = fp_k.std(ddof=1) / math.sqrt(n_samples)
    alloc = np.zeros(num_uts)
    for g in range(num_groups):
        members = np.flatnonzero(group_of_ut == g)
        if members.size == 0:
            continue
        sub_alloc, _ = allocate_common_rate(f_c[members], f_p[members])
        alloc[members] = sub_alloc
    mmfr = float(np.min(alloc + f_p))
    return RateReport(f_common=f_c, f_private=f_p, common_alloc=alloc,
                      mmfr=mmfr, stderr_common=se_c, stderr_private=se_p)
