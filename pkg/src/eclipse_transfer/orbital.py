"""Osculating two-body quantities and transfer bookkeeping."""
from __future__ import annotations

import math
from dataclasses import dataclass

from eclipse_transfer.dynamics import Environment, VehicleSpec
from eclipse_transfer.errors import SingularityError, UnboundOrbitError


@dataclass(frozen=True)
class OrbitSpec:
    """Planar orbit given by its apsis altitudes above the equatorial radius (m)."""

    apogee_alt: float
    perigee_alt: float

    def __post_init__(self):
        if not self.perigee_alt >= 0:
            raise ValueError(f"perigee_alt must be >= 0, got {self.perigee_alt}")
        if not self.apogee_alt >= self.perigee_alt:
            raise ValueError(
                f"apogee_alt ({self.apogee_alt}) below perigee_alt ({self.perigee_alt})")


@dataclass(frozen=True)
class OsculatingElements:
    sma: float  # m
    ecc: float
    apogee_alt: float  # m
    perigee_alt: float  # m
    energy: float  # m^2/s^2


def elements_from_state(env: Environment, x: float, y: float,
                        vx: float, vy: float) -> OsculatingElements:
    """Semi-major axis, eccentricity and apsis altitudes of the osculating ellipse.

    Raises:
        UnboundOrbitError: for zero or positive specific energy.
    """
    r = math.hypot(x, y)
    if r == 0.0:
        raise SingularityError("position at r = 0")
    energy = 0.5 * (vx * vx + vy * vy) - env.gm / r
    if energy >= 0.0:
        raise UnboundOrbitError(f"specific energy {energy:.6g} m^2/s^2 is not negative")
    sma = -env.gm / (2.0 * energy)
    # e cos E and e sin E: no cancellation under the square root near e = 0
    ecc = math.hypot(1.0 - r / sma, (x * vx + y * vy) / math.sqrt(env.gm * sma))
    return OsculatingElements(
        sma=sma,
        ecc=ecc,
        apogee_alt=sma * (1.0 + ecc) - env.earth_radius,
        perigee_alt=sma * (1.0 - ecc) - env.earth_radius,
        energy=energy,
    )


def initial_state(env: Environment, orbit: OrbitSpec) -> tuple[float, float, float, float]:
    """Cartesian ``(x, y, vx, vy)`` at perigee, on +x, moving counter-clockwise."""
    rp = env.earth_radius + orbit.perigee_alt
    ra = env.earth_radius + orbit.apogee_alt
    sma = 0.5 * (rp + ra)
    vp = math.sqrt(env.gm * (2.0 / rp - 1.0 / sma))
    return rp, 0.0, 0.0, vp


def delta_v(vehicle: VehicleSpec, m_final: float) -> float:
    """Ideal velocity increment for burning down to ``m_final``."""
    if not 0.0 < m_final <= vehicle.m0:
        raise ValueError(f"m_final must lie in (0, m0], got {m_final}")
    return vehicle.ve * math.log(vehicle.m0 / m_final)


def local_time_to_alpha0(perigee_local_time: float) -> float:
    """Sun polar angle at t = 0 for a perigee local time in hours.

    0 h puts the Sun above the apogee (alpha0 = pi), 12 h above the perigee.
    """
    if not 0.0 <= perigee_local_time < 24.0:
        raise ValueError(f"local time must be in [0, 24) h, got {perigee_local_time}")
    return math.pi - perigee_local_time * math.pi / 12.0
