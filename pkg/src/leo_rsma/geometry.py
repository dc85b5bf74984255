"""Constellation and user-terminal geometry on a spherical Earth.

Satellites sit at a fixed altitude on a regular central-angle grid along a
great circle; user terminals (UTs) are dropped uniformly inside the union of
the satellites' coverage caps.  All positions are Cartesian ECEF-like
coordinates in km with the Earth center at the origin.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

EARTH_RADIUS_KM = 6371.0

MAX_REJECTION_ATTEMPTS = 10**6


class CoverageError(ValueError):
    """Raised when the scenario geometry cannot serve every UT."""


def max_slant_range(altitude_km: float, max_nadir_angle_deg: float,
                    earth_radius_km: float = EARTH_RADIUS_KM) -> float:
    """Largest satellite-to-UT distance (km) inside the coverage cone.

    Solves the Earth-center / satellite / UT triangle: the angle at the UT is
    the obtuse solution of the law of sines, and the slant range follows from
    the remaining central angle.
    """
    if altitude_km <= 0:
        raise ValueError(f"altitude must be positive, got {altitude_km}")
    if not 0 < max_nadir_angle_deg < 90:
        raise ValueError(
            f"nadir angle must be in (0, 90) deg, got {max_nadir_angle_deg}")
    theta = math.radians(max_nadir_angle_deg)
    sin_ut = (earth_radius_km + altitude_km) / earth_radius_km * math.sin(theta)
    if sin_ut > 1.0:
        raise ValueError(
            f"nadir angle {max_nadir_angle_deg} deg points beyond the horizon "
            f"(sin of UT interior angle = {sin_ut:.6f} > 1)")
    ut_angle = math.pi - math.asin(sin_ut)  # obtuse branch
    central = math.pi - theta - ut_angle
    return earth_radius_km * math.sin(central) / math.sin(theta)


def coverage_cap_radius(altitude_km: float, max_nadir_angle_deg: float,
                        earth_radius_km: float = EARTH_RADIUS_KM) -> float:
    """Angular radius (deg) of a satellite's coverage cap about its nadir."""
    theta = math.radians(max_nadir_angle_deg)
    sin_ut = (earth_radius_km + altitude_km) / earth_radius_km * math.sin(theta)
    if sin_ut > 1.0:
        raise ValueError("nadir angle points beyond the horizon")
    return math.degrees(math.asin(sin_ut) - theta)


def elevation_angle(sat_pos: np.ndarray, ut_pos: np.ndarray,
                    earth_radius_km: float = EARTH_RADIUS_KM) -> float:
    """Elevation (deg) of the satellite above the UT's local horizontal plane."""
    del earth_radius_km  # radial direction follows from the UT position itself
    ray = np.asarray(sat_pos, dtype=float) - np.asarray(ut_pos, dtype=float)
    up = np.asarray(ut_pos, dtype=float)
    up = up / np.linalg.norm(up)
    s = float(np.dot(ray, up) / np.linalg.norm(ray))
    return math.degrees(math.asin(min(1.0, max(-1.0, s))))


def associate(distances_km: np.ndarray, d_max_km: float
              ) -> tuple[list[list[int]], list[list[int]]]:
    """Serving sets from the distance threshold.

    Returns ``(served_uts, serving_sats)`` where ``served_uts[s]`` lists the
    UTs within ``d_max_km`` of satellite ``s`` and ``serving_sats[k]`` the
    satellites covering UT ``k``.  Every UT must be covered by at least one
    satellite.
    """
    d = np.asarray(distances_km, dtype=float)
    if not np.all(np.isfinite(d)):
        raise ValueError("distances must be finite")
    num_uts, num_sats = d.shape
    in_range = d <= d_max_km
    serving_sats = [[int(s) for s in np.flatnonzero(in_range[k])]
                    for k in range(num_uts)]
    served_uts = [[int(k) for k in np.flatnonzero(in_range[:, s])]
                  for s in range(num_sats)]
    for k, sats in enumerate(serving_sats):
        if not sats:
            raise CoverageError(f"UT {k} is outside every coverage area")
    return served_uts, serving_sats


@dataclass(frozen=True)
class ScenarioConfig:
    altitude_km: float = 600.0           # satellite altitude H
    max_nadir_angle_deg: float = 30.0    # coverage cone half-angle at the satellite
    num_satellites: int = 4
    num_uts: int = 6
    satellite_spacing_deg: float | None = None  # central-angle grid pitch; None = 1.4 x cap radius
    earth_radius_km: float = EARTH_RADIUS_KM
    rng_seed: int = 0

    def __post_init__(self):
        if self.altitude_km <= 0:
            raise ValueError("altitude must be positive")
        if not 0 < self.max_nadir_angle_deg < 90:
            raise ValueError("max nadir angle must be in (0, 90) deg")
        if self.num_satellites < 1 or self.num_uts < 1:
            raise ValueError("need at least one satellite and one UT")

    @property
    def spacing_deg(self) -> float:
        if self.satellite_spacing_deg is not None:
            return self.satellite_spacing_deg
        # adjacent caps overlap by ~30% of their diameter
        return 1.4 * coverage_cap_radius(
            self.altitude_km, self.max_nadir_angle_deg, self.earth_radius_km)


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    satellite_positions: np.ndarray      # (S, 3) km
    ut_positions: np.ndarray             # (K, 3) km
    distances_km: np.ndarray             # (K, S)
    elevations_deg: np.ndarray           # (K, S)
    d_max_km: float
    served_uts: list[list[int]] = field(repr=False)   # per satellite
    serving_sats: list[list[int]] = field(repr=False)  # per UT

    @property
    def num_satellites(self) -> int:
        return self.satellite_positions.shape[0]

    @property
    def num_uts(self) -> int:
        return self.ut_positions.shape[0]

    def association_mask(self) -> np.ndarray:
        """Boolean (S, K) matrix, True where satellite s serves UT k."""
        mask = np.zeros((self.num_satellites, self.num_uts), dtype=bool)
        for s, uts in enumerate(self.served_uts):
            mask[s, uts] = True
        return mask

    def to_json(self) -> str:
        return json.dumps({
            "schema": "leo-rsma/scenario/v1",
            "config": {
                "altitude_km": self.config.altitude_km,
                "max_nadir_angle_deg": self.config.max_nadir_angle_deg,
                "num_satellites": self.config.num_satellites,
                "num_uts": self.config.num_uts,
                "satellite_spacing_deg": self.config.satellite_spacing_deg,
                "earth_radius_km": self.config.earth_radius_km,
                "rng_seed": self.config.rng_seed,
            },
            "satellite_positions_km": self.satellite_positions.tolist(),
            "ut_positions_km": self.ut_positions.tolist(),
            "distances_km": self.distances_km.tolist(),
            "elevations_deg": self.elevations_deg.tolist(),
            "d_max_km": self.d_max_km,
            "served_uts": self.served_uts,
            "serving_sats": self.serving_sats,
        })

    @staticmethod
    def from_json(text: str) -> "Scenario":
        doc = json.loads(text)
        if doc.get("schema") != "leo-rsma/scenario/v1":
            raise ValueError(f"unknown scenario schema: {doc.get('schema')!r}")
        cfg = ScenarioConfig(**doc["config"])
        return Scenario(
            config=cfg,
            satellite_positions=np.asarray(doc["satellite_positions_km"]),
            ut_positions=np.asarray(doc["ut_positions_km"]),
            distances_km=np.asarray(doc["distances_km"]),
            elevations_deg=np.asarray(doc["elevations_deg"]),
            d_max_km=doc["d_max_km"],
            served_uts=[list(x) for x in doc["served_uts"]],
            serving_sats=[list(x) for x in doc["serving_sats"]],
        )


def _lonlat_to_cart(lon_rad: np.ndarray, lat_rad: np.ndarray,
                    radius: float) -> np.ndarray:
    return radius * np.stack([
        np.cos(lat_rad) * np.cos(lon_rad),
        np.cos(lat_rad) * np.sin(lon_rad),
        np.sin(lat_rad),
    ], axis=-1)


def build_scenario(config: ScenarioConfig) -> Scenario:
    """Place satellites on the grid and drop UTs uniformly in covered area.

    Deterministic for a fixed ``config.rng_seed``.  UT sampling rejects points
    outside every coverage cap and gives up after a bounded number of tries.
    """
    rng = np.random.default_rng(config.rng_seed)
    re = config.earth_radius_km
    r_orbit = re + config.altitude_km
    cap_deg = coverage_cap_radius(config.altitude_km, config.max_nadir_angle_deg, re)
    cap_rad = math.radians(cap_deg)
    d_max = max_slant_range(config.altitude_km, config.max_nadir_angle_deg, re)

    s_count = config.num_satellites
    pitch = math.radians(config.spacing_deg)
    lons = (np.arange(s_count) - (s_count - 1) / 2.0) * pitch
    sat_pos = _lonlat_to_cart(lons, np.zeros(s_count), r_orbit)
    sub_points = _lonlat_to_cart(lons, np.zeros(s_count), re)

    # uniform-area sampling over the bounding lon/lat box of the cap union
    lon_lo, lon_hi = lons.min() - cap_rad, lons.max() + cap_rad
    sin_lat_hi = math.sin(cap_rad)
    ut_pos = np.empty((config.num_uts, 3))
    found = 0
    attempts = 0
    batch = max(64, 4 * config.num_uts)
    while found < config.num_uts:
        if attempts >= MAX_REJECTION_ATTEMPTS:
            raise CoverageError(
                f"could not place {config.num_uts} UTs inside the coverage "
                f"union after {attempts} attempts")
        lon = rng.uniform(lon_lo, lon_hi, size=batch)
        lat = np.arcsin(rng.uniform(-sin_lat_hi, sin_lat_hi, size=batch))
        attempts += batch
        cand = _lonlat_to_cart(lon, lat, re)
        # inside some cap <=> central angle to a sub-satellite point <= cap
        cosang = cand @ sub_points.T / re**2
        ok = np.any(cosang >= math.cos(cap_rad), axis=1)
        take = min(int(ok.sum()), config.num_uts - found)
        ut_pos[found:found + take] = cand[ok][:take]
        found += take

    diff = ut_pos[:, None, :] - sat_pos[None, :, :]
    distances = np.linalg.norm(diff, axis=-1)
    elevations = np.empty_like(distances)
    for k in range(config.num_uts):
        for s in range(s_count):
            elevations[k, s] = elevation_angle(sat_pos[s], ut_pos[k], re)

    served_uts, serving_sats = associate(distances, d_max)
    return Scenario(
        config=config,
        satellite_positions=sat_pos,
        ut_positions=ut_pos,
        distances_km=distances,
        elevations_deg=elevations,
        d_max_km=d_max,
        served_uts=served_uts,
        serving_sats=serving_sats,
    )
