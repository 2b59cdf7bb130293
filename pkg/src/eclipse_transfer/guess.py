"""Two-angle analytical initial costate.

The guess is borrowed from the high-thrust orbit insertion solution, where
position and velocity costates are orthogonal and the velocity costate turns
at a constant rate.  Only the two angles are left free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from eclipse_transfer.dynamics import Environment, VehicleSpec
from eclipse_transfer.errors import InvalidAngleError, NoRootError

MAX_PITCH = math.asin(1.0 / math.sqrt(3.0))


@dataclass(frozen=True)
class CostateGuess:
    theta_v: float
    theta_n: float
    omega_v: float  # 1/s
    pr0: tuple[float, float]
    pv0: tuple[float, float]
    pm0: float


def rotation_rate(gm: float, r0: float, theta: float) -> float:
    arg = 1.0 - 3.0 * math.sin(theta) ** 2
    if arg <= 0.0:
        raise InvalidAngleError(
            f"angle {math.degrees(theta):.4f} deg outside (-{math.degrees(MAX_PITCH):.4f}, "
            f"{math.degrees(MAX_PITCH):.4f}) deg: rotation rate is not real")
    return math.sqrt(gm / r0**3 * arg)


def build_guess(env: Environment, vehicle: VehicleSpec, r0: float,
                theta_v: float, theta_n: float, *, prograde: bool = True) -> CostateGuess:
    """Initial costate from the velocity-costate angle and position-costate angle.

    Components are inertial; at the initial perigee the inertial y axis is the
    local horizontal, so ``theta_v = 0`` thrusts along the initial velocity.

    Args:
        prograde: orient the position costate so that, for ``theta_n = theta_v``,
            the velocity costate turns with the counter-clockwise orbital motion,
            ``pr0 = omega * (cos theta_n, -sin theta_n)``.  ``False`` gives the
            mirrored ``omega * (-cos theta_n, sin theta_n)``, whose thrust
            direction turns against the motion on this orbit.
    """
    omega = rotation_rate(env.gm, r0, theta_v)
    pv0 = (math.sin(theta_v), math.cos(theta_v))
    sign = 1.0 if prograde else -1.0
    pr0 = (sign * omega * math.cos(theta_n), -sign * omega * math.sin(theta_n))
    return CostateGuess(
        theta_v=theta_v,
        theta_n=theta_n,
        omega_v=omega,
        pr0=pr0,
        pv0=pv0,
        pm0=vehicle.ve / vehicle.m0,
    )


def pitch_residual(env: Environment, r0: float, v0: float, gamma0: float,
                   theta: float, branch: int = 1) -> float:
    """Residual of the high-thrust initial pitch equation at ``theta``."""
    vc0 = math.sqrt(env.gm / r0)
    return (math.sin(theta - gamma0)
            - branch * vc0 / v0 * math.sin(theta) / math.sqrt(1.0 - 3.0 * math.sin(theta) ** 2))


def solve_theta0(env: Environment, r0: float, v0: float, gamma0: float,
                 branch: int = 1, scan_points: int = 2001) -> float:
    """Root of the high-thrust pitch equation, by scan then bisection.

    Auxiliary only: it can help centre the search box but the solve pipeline
    does not use it.  Returns the admissible root closest to zero.

    Raises:
        NoRootError: if the residual has no sign change in the admissible interval.
    """
    if branch not in (-1, 1):
        raise ValueError(f"branch must be +1 or -1, got {branch}")
    if not v0 > 0:
        raise ValueError(f"v0 must be positive, got {v0}")

    def f(th):
        return pitch_residual(env, r0, v0, gamma0, th, branch)

    edge = MAX_PITCH * (1.0 - 1e-9)
    grid = np.linspace(-edge, edge, scan_points)
    values = np.array([f(th) for th in grid])
    brackets = []
    for i in range(len(grid) - 1):
        if values[i] == 0.0:
            brackets.append((grid[i], grid[i]))
        elif values[i] * values[i + 1] < 0.0:
            brackets.append((grid[i], grid[i + 1]))
    if values[-1] == 0.0:
        brackets.append((grid[-1], grid[-1]))
    if not brackets:
        raise NoRootError("pitch equation has no sign change on the admissible interval")

    lo, hi = min(brackets, key=lambda b: min(abs(b[0]), abs(b[1])))
    if lo == hi:
        return float(lo)
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0 or hi - lo <= 4e-16 * max(1.0, abs(mid)):
            return float(mid)
        if (fmid < 0.0) == (flo < 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return float(0.5 * (lo + hi))
