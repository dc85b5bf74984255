"""Array responses, per-link channel statistics, and realization sampling.

Each satellite-UT link is summarized by the tuple (beta, kappa, g, d0, Sigma):
average power, Rician factor, unit-norm transmit response, unit-norm LoS
receive response, and trace-one NLoS covariance.  From these the per-UT
deterministic surrogate channel (the PSD square root of ``G D_hat G^H``) is
assembled, and instantaneous channels are drawn for Monte Carlo evaluation.

Steering vectors are unit-norm (prefix ``1/sqrt(n)``) so that the mean
received power per link equals beta exactly and the second-moment identity
``E[D^H D] = D_hat`` holds with trace-one NLoS covariances.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299792458.0   # m/s
BOLTZMANN = 1.380649e-23       # J/K

# Linear Rician factor per 10-degree elevation bin, [0,10) ... [80,90].
# Monotone default spanning roughly 2..25; override per deployment data.
DEFAULT_RICIAN_TABLE = (2.0, 3.2, 5.0, 7.1, 10.0, 13.5, 17.5, 21.5, 25.0)

PSD_CLAMP_REL = 1e-12  # eigenvalues below -rel*lambda_max are rejected


@dataclass(frozen=True)
class ArrayConfig:
    m_x: int = 5                 # satellite UPA elements along x
    m_y: int = 5
    n_x: int = 4                 # UT UPA elements along x'
    n_y: int = 4
    d_x: float = 1.0             # spacings in multiples of the wavelength
    d_y: float = 1.0
    d_ux: float = 0.5
    d_uy: float = 0.5
    carrier_frequency_hz: float = 2e9
    bandwidth_hz: float = 50e6
    noise_temperature_k: float = 290.0
    gain_sat_dbi: float = 6.0
    gain_ut_dbi: float = 0.0
    rician_table: tuple[float, ...] = DEFAULT_RICIAN_TABLE

    def __post_init__(self):
        if min(self.m_x, self.m_y, self.n_x, self.n_y) < 1:
            raise ValueError("antenna counts must be >= 1")
        if min(self.d_x, self.d_y, self.d_ux, self.d_uy) <= 0:
            raise ValueError("antenna spacings must be positive")

    @property
    def num_sat_antennas(self) -> int:
        return self.m_x * self.m_y

    @property
    def num_ut_antennas(self) -> int:
        return self.n_x * self.n_y

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency_hz

    def rician_factor(self, elevation_deg: float) -> float:
        """Linear Rician factor from the elevation-binned table."""
        bin_idx = int(max(0.0, min(elevation_deg, 89.999)) // 10)
        return self.rician_table[min(bin_idx, len(self.rician_table) - 1)]


def steering_vector(n: int, spacing_over_lambda: float, cosine: float) -> np.ndarray:
    """Unit-norm ULA steering vector for one array axis."""
    if n < 1:
        raise ValueError("steering vector needs n >= 1")
    phase = -2j * math.pi * spacing_over_lambda * cosine * np.arange(n)
    return np.exp(phase) / math.sqrt(n)


def transmit_response(theta_x_rad: float, theta_y_rad: float,
                      cfg: ArrayConfig) -> np.ndarray:
    """Satellite UPA response g = e_x(sin(ty)cos(tx)) kron e_y(cos(ty))."""
    q_x = math.sin(theta_y_rad) * math.cos(theta_x_rad)
    q_y = math.cos(theta_y_rad)
    return np.kron(steering_vector(cfg.m_x, cfg.d_x, q_x),
                   steering_vector(cfg.m_y, cfg.d_y, q_y))


def transmit_angles(sat_pos: np.ndarray, ut_pos: np.ndarray) -> tuple[float, float]:
    """Departure angles (theta_x, theta_y) of the UT seen from the satellite.

    The satellite UPA lies in the plane normal to nadir; its x axis points
    along the orbital grid direction (increasing longitude) and its y axis
    completes the right-handed local frame.
    """
    sat = np.asarray(sat_pos, dtype=float)
    nadir = -sat / np.linalg.norm(sat)
    # grid direction: tangent of the equatorial circle at the sub-satellite point
    x_axis = np.array([-sat[1], sat[0], 0.0])
    nx = np.linalg.norm(x_axis)
    if nx < 1e-12:  # satellite on the z axis; any tangent works
        x_axis = np.array([1.0, 0.0, 0.0])
    else:
        x_axis = x_axis / nx
    y_axis = np.cross(nadir, x_axis)
    ray = np.asarray(ut_pos, dtype=float) - sat
    ray = ray / np.linalg.norm(ray)
    q_x = float(np.dot(ray, x_axis))
    q_y = float(np.dot(ray, y_axis))
    theta_y = math.acos(min(1.0, max(-1.0, q_y)))
    sin_ty = math.sin(theta_y)
    if sin_ty < 1e-12:
        theta_x = 0.0
    else:
        theta_x = math.acos(min(1.0, max(-1.0, q_x / sin_ty)))
    return theta_x, theta_y


def path_gain(distance_m: float, wavelength_m: float,
              gain_sat_dbi: float, gain_ut_dbi: float) -> float:
    """Free-space average channel power (linear)."""
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    g_lin = 10.0 ** ((gain_sat_dbi + gain_ut_dbi) / 10.0)
    return g_lin / (4.0 * math.pi * distance_m / wavelength_m) ** 2


def noise_variance(noise_temperature_k: float, bandwidth_hz: float) -> float:
    """Thermal noise power k_B * T_n * B in watts."""
    if noise_temperature_k < 0:
        raise ValueError("noise temperature must be >= 0")
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return BOLTZMANN * noise_temperature_k * bandwidth_hz


def los_receive_response(elevation_deg: float, cfg: ArrayConfig,
                         rng: np.random.Generator) -> np.ndarray:
    """LoS receive response for a UT array with random azimuthal attitude.

    The arrival angles (phi_x, phi_y) must satisfy
    ``sin(phi_x) sin(phi_y) = sin(elevation)``; phi_y is drawn uniformly from
    the feasible interval and phi_x solved from the constraint.
    """
    alpha = math.radians(max(-90.0, min(90.0, elevation_deg)))
    lo = math.asin(min(1.0, abs(math.sin(alpha))))
    if math.pi - lo <= lo + 1e-12:
        phi_y = math.pi / 2
    else:
        phi_y = rng.uniform(lo, math.pi - lo)
    sin_py = math.sin(phi_y)
    if sin_py < 1e-12:
        phi_x = 0.0
    else:
        phi_x = math.asin(min(1.0, max(-1.0, math.sin(alpha) / sin_py)))
    q_x = math.sin(phi_y) * math.cos(phi_x)
    q_y = math.cos(phi_y)
    return np.kron(steering_vector(cfg.n_x, cfg.d_ux, q_x),
                   steering_vector(cfg.n_y, cfg.d_uy, q_y))


def nlos_covariance(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random diagonal trace-one PSD covariance for the NLoS component."""
    if n < 1:
        raise ValueError("need n >= 1")
    mu = rng.uniform(0.0, 1.0, size=n)
    return np.diag(mu / mu.sum())


@dataclass(frozen=True)
class LinkStatistics:
    """Statistical CSI of one satellite-UT link."""
    beta: float                  # average channel power, linear
    kappa: float                 # Rician factor, linear
    g: np.ndarray                # (M,) unit-norm transmit response
    d0: np.ndarray               # (N,) unit-norm LoS receive response
    sigma: np.ndarray            # (N, N) PSD, trace 1

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        for name, vec in (("g", self.g), ("d0", self.d0)):
            if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
                raise ValueError(f"{name} must be unit-norm")
        if abs(np.trace(self.sigma).real - 1.0) > 1e-12:
            raise ValueError("sigma must have unit trace")

    def scaled(self, power_factor: float) -> "LinkStatistics":
        """Same link with beta multiplied by ``power_factor``."""
        return LinkStatistics(self.beta * power_factor, self.kappa,
                              self.g, self.d0, self.sigma)

    @property
    def los_amplitude(self) -> float:
        return math.sqrt(self.beta * self.kappa / (self.kappa + 1.0))

    @property
    def nlos_amplitude(self) -> float:
        return math.sqrt(self.beta / (self.kappa + 1.0))


@dataclass(frozen=True)
class EffectiveChannel:
    """Deterministic per-UT surrogate through which bound rates are computed."""
    h_hat: np.ndarray        # (MS, MS) Hermitian PSD square root of G D_hat G^H
    d_hat: np.ndarray        # (S, S) second moment of the receive responses
    g_block: np.ndarray      # (MS, S) block-diagonal transmit map

    @property
    def dim(self) -> int:
        return self.h_hat.shape[0]


@dataclass(frozen=True)
class ChannelRealization:
    """One sampled receive-response draw for a single UT."""
    d: np.ndarray            # (N, S) stacked receive responses
    g_block: np.ndarray      # (MS, S)

    @property
    def h(self) -> np.ndarray:
        """Instantaneous aggregated channel H = D G^H, shape (N, MS)."""
        return self.d @ self.g_block.conj().T


def block_transmit_map(g_vectors: list[np.ndarray]) -> np.ndarray:
    """Block-diagonal (MS, S) map with one transmit response per satellite."""
    num_sats = len(g_vectors)
    m = g_vectors[0].shape[0]
    out = np.zeros((m * num_sats, num_sats), dtype=complex)
    for s, g in enumerate(g_vectors):
        out[s * m:(s + 1) * m, s] = g
    return out


def second_moment_matrix(stats: list[LinkStatistics],
                         los_diagonal: bool = False) -> np.ndarray:
    """The S x S matrix E[D^H D]: betas on the diagonal, LoS cross terms off it.

    With ``los_diagonal`` the NLoS share of each diagonal entry is dropped,
    leaving only the LoS power kappa*beta/(kappa+1) (directional-CSI view).
    """
    num_sats = len(stats)
    amp = np.array([st.los_amplitude for st in stats])
    d0 = np.stack([st.d0 for st in stats], axis=1)  # (N, S)
    gram = d0.conj().T @ d0
    d_hat = np.outer(amp, amp) * gram
    diag = [st.los_amplitude ** 2 if los_diagonal else st.beta for st in stats]
    np.fill_diagonal(d_hat, diag)
    return d_hat


def psd_sqrt(mat: np.ndarray, clamp_rel: float = PSD_CLAMP_REL) -> np.ndarray:
    """Hermitian PSD square root; small negative eigenvalues clamp to zero."""
    herm = 0.5 * (mat + mat.conj().T)
    eigvals, eigvecs = np.linalg.eigh(herm)
    lam_max = max(float(eigvals[-1]), 0.0)
    floor = -clamp_rel * lam_max
    if np.any(eigvals < floor):
        raise ValueError(
            f"matrix is not PSD: min eigenvalue {eigvals[0]:.3e} "
            f"below tolerance {floor:.3e}")
    root = np.sqrt(np.clip(eigvals, 0.0, None))
    return (eigvecs * root) @ eigvecs.conj().T


def effective_channel(stats: list[LinkStatistics],
                      los_diagonal: bool = False) -> EffectiveChannel:
    """Per-UT effective channel from this UT's link statistics to every satellite."""
    d_hat = second_moment_matrix(stats, los_diagonal=los_diagonal)
    g_block = block_transmit_map([st.g for st in stats])
    # G has orthonormal columns, so the PSD root can be formed in the S-dim space
    eigvals, eigvecs = np.linalg.eigh(0.5 * (d_hat + d_hat.conj().T))
    lam_max = max(float(eigvals[-1]), 0.0)
    if np.any(eigvals < -PSD_CLAMP_REL * lam_max):
        raise ValueError(
            f"inconsistent link statistics: D_hat eigenvalue {eigvals[0]:.3e} < 0")
    root = np.sqrt(np.clip(eigvals, 0.0, None))
    basis = g_block @ eigvecs                      # (MS, S), orthonormal columns
    h_hat = (basis * root) @ basis.conj().T
    return EffectiveChannel(h_hat=h_hat, d_hat=d_hat, g_block=g_block)


def sample_receive_responses(stats: list[LinkStatistics], n_samples: int,
                             rng: np.random.Generator) -> np.ndarray:
    """Draw (n_samples, N, S) receive-response realizations for one UT."""
    n_ants = stats[0].d0.shape[0]
    num_sats = len(stats)
    out = np.empty((n_samples, n_ants, num_sats), dtype=complex)
    for s, st in enumerate(stats):
        white = (rng.standard_normal((n_samples, n_ants))
                 + 1j * rng.standard_normal((n_samples, n_ants)))
        off_diag = st.sigma - np.diag(np.diag(st.sigma))
        if np.linalg.norm(off_diag) <= 1e-14:
            noise = white * np.sqrt(
                np.clip(np.diag(st.sigma).real, 0.0, None) / 2.0)
        else:
            noise = white @ (psd_sqrt(st.sigma) / math.sqrt(2.0)).T
        out[:, :, s] = st.los_amplitude * st.d0 + st.nlos_amplitude * noise
    return out


def sample_realization(stats: list[LinkStatistics],
                       rng: np.random.Generator) -> ChannelRealization:
    """One instantaneous channel draw for a single UT."""
    d = sample_receive_responses(stats, 1, rng)[0]
    return ChannelRealization(d=d, g_block=block_transmit_map([st.g for st in stats]))


def build_link_statistics(scenario, arrays: ArrayConfig,
                          rng: np.random.Generator) -> list[list[LinkStatistics]]:
    """Statistics for every (UT, satellite) pair of a scenario.

    All pairs are populated, not only serving ones: every satellite's signal
    reaches every UT and enters the interference balance.
    """
    lam = arrays.wavelength_m
    table: list[list[LinkStatistics]] = []
    for k in range(scenario.num_uts):
        row = []
        for s in range(scenario.num_satellites):
            dist_m = scenario.distances_km[k, s] * 1e3
            elev = scenario.elevations_deg[k, s]
            theta_x, theta_y = transmit_angles(
                scenario.satellite_positions[s], scenario.ut_positions[k])
            row.append(LinkStatistics(
                beta=path_gain(dist_m, lam, arrays.gain_sat_dbi, arrays.gain_ut_dbi),
                kappa=arrays.rician_factor(elev),
                g=transmit_response(theta_x, theta_y, arrays),
                d0=los_receive_response(elev, arrays, rng),
                sigma=nlos_covariance(arrays.num_ut_antennas, rng),
            ))
        table.append(row)
    return table


# ---------------------------------------------------------------------------
# JSON schemas (complex entries as [re, im] pairs)

def _complex_to_pairs(arr: np.ndarray) -> list:
    stacked = np.stack([np.real(arr), np.imag(arr)], axis=-1)
    return stacked.tolist()


def _pairs_to_complex(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def link_statistics_to_json(table: list[list[LinkStatistics]]) -> str:
    return json.dumps({
        "schema": "leo-rsma/link-statistics/v1",
        "links": [[{
            "beta": st.beta,
            "kappa": st.kappa,
            "g": _complex_to_pairs(st.g),
            "d0": _complex_to_pairs(st.d0),
            "sigma": _complex_to_pairs(st.sigma),
        } for st in row] for row in table],
    })


def link_statistics_from_json(text: str) -> list[list[LinkStatistics]]:
    doc = json.loads(text)
    if doc.get("schema") != "leo-rsma/link-statistics/v1":
        raise ValueError(f"unknown link-statistics schema: {doc.get('schema')!r}")
    return [[LinkStatistics(
        beta=entry["beta"],
        kappa=entry["kappa"],
        g=_pairs_to_complex(entry["g"]),
        d0=_pairs_to_complex(entry["d0"]),
        sigma=_pairs_to_complex(entry["sigma"]),
    ) for entry in row] for row in doc["links"]]


def effective_channel_to_json(ch: EffectiveChannel) -> str:
    return json.dumps({
        "schema": "leo-rsma/effective-channel/v1",
        "h_hat": _complex_to_pairs(ch.h_hat),
        "d_hat": _complex_to_pairs(ch.d_hat),
        "g_block": _complex_to_pairs(ch.g_block),
    })


def effective_channel_from_json(text: str) -> EffectiveChannel:
    doc = json.loads(text)
    if doc.get("schema") != "leo-rsma/effective-channel/v1":
        raise ValueError(f"unknown effective-channel schema: {doc.get('schema')!r}")
    return EffectiveChannel(
        h_hat=_pairs_to_complex(doc["h_hat"]),
        d_hat=_pairs_to_complex(doc["d_hat"]),
        g_block=_pairs_to_complex(doc["g_block"]),
    )
