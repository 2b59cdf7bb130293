"""Reduced minimum-time transfer: two costate angles, apogee-miss objective."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from eclipse_transfer.direct import PENALTY, OptimizerReport, SearchBox, direct_minimize
from eclipse_transfer.dynamics import Environment, VehicleSpec
from eclipse_transfer.errors import NoFeasibleTransferError, TransferError, UnboundOrbitError
from eclipse_transfer.orbital import OrbitSpec, delta_v, elements_from_state, local_time_to_alpha0
from eclipse_transfer.propagation import (
    IntegratorSettings,
    StopCondition,
    Trajectory,
    propagate,
    run_kernel,
    stop_condition,
)
from eclipse_transfer import _kernels as K

log = logging.getLogger(__name__)

DV_GUESS = 3000.0  # m/s, velocity budget behind the default time cap
MAX_TIME_FACTOR = 3.0
BALLISTIC_CAP_PERIODS = 10.0


@dataclass(frozen=True)
class TransferProblem:
    env: Environment
    vehicle: VehicleSpec
    initial_orbit: OrbitSpec
    target: OrbitSpec
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    box_half_width: float = math.radians(10.0)
    max_evals: int = 3000
    epsilon: float = 1e-4

    def __post_init__(self):
        if not self.target.perigee_alt > self.initial_orbit.perigee_alt:
            raise ValueError("target perigee must be above the initial perigee")
        if not 0 < self.box_half_width < math.asin(1.0 / math.sqrt(3.0)):
            raise ValueError("box half width must lie in (0, asin(1/sqrt(3)))")
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")

    def max_time(self) -> float:
        """Propagation cap: explicit setting, else a multiple of the burn time estimate.

        Without thrust the cap falls back to ten periods of the initial orbit.
        """
        if self.integrator.max_time is not None:
            return self.integrator.max_time
        v = self.vehicle
        if v.thrust > 0:
            t_est = v.m0 * v.ve * (1.0 - math.exp(-DV_GUESS / v.ve)) / v.thrust
            return MAX_TIME_FACTOR * t_est
        rp = self.env.earth_radius + self.initial_orbit.perigee_alt
        ra = self.env.earth_radius + self.initial_orbit.apogee_alt
        sma = 0.5 * (rp + ra)
        return BALLISTIC_CAP_PERIODS * 2.0 * math.pi * math.sqrt(sma**3 / self.env.gm)


@dataclass(frozen=True)
class SolveResult:
    theta_v: float  # rad
    theta_n: float  # rad
    t_f: float  # s
    m_f: float  # kg
    delta_v: float  # m/s
    revolutions: int
    eclipse_time: float  # s
    objective: float  # m^2
    evaluations: int
    stop: StopCondition
    apogee_alt: float = math.nan  # m, at t_f
    trajectory: Trajectory | None = field(default=None, repr=False, compare=False)
    report: OptimizerReport | None = field(default=None, repr=False, compare=False)


def gto_to_geo(thrust: float = 1.0, perigee_local_time: float = 0.0, *,
               eclipses: bool = True, m0: float = 1000.0, ve: float = 14710.0,
               initial_orbit: OrbitSpec | None = None,
               integrator: IntegratorSettings | None = None,
               max_evals: int = 3000) -> TransferProblem:
    """The GTO (36000 x 500 km) to 36000 km circular scenario family."""
    env = Environment(alpha0=local_time_to_alpha0(perigee_local_time),
                      eclipses_enabled=eclipses)
    return TransferProblem(
        env=env,
        vehicle=VehicleSpec(m0=m0, thrust=thrust, ve=ve),
        initial_orbit=initial_orbit or OrbitSpec(36000e3, 500e3),
        target=OrbitSpec(36000e3, 36000e3),
        integrator=integrator or IntegratorSettings(),
        max_evals=max_evals,
    )


def _apogee_miss_sq(problem: TransferProblem, s) -> tuple[float, float]:
    try:
        el = elements_from_state(problem.env, s[K.X], s[K.Y], s[K.VX], s[K.VY])
    except UnboundOrbitError:
        return PENALTY, math.inf
    return (el.apogee_alt - problem.target.apogee_alt) ** 2, el.apogee_alt


def objective(problem: TransferProblem, theta_v: float, theta_n: float) -> float:
    """Squared apogee miss (m^2) when the perigee target is reached, else ``PENALTY``."""
    try:
        out = run_kernel(problem, theta_v, theta_n, False)
    except TransferError:
        return PENALTY
    if out[0] != K.STOP_PERIGEE:
        return PENALTY
    return _apogee_miss_sq(problem, out[3])[0]


def solve(problem: TransferProblem, *, workers: int | None = None) -> SolveResult:
    """Search the costate angles with DIRECT, then re-propagate the best pair.

    Raises:
        NoFeasibleTransferError: if no evaluated pair reached the perigee target.
    """
    w = problem.box_half_width
    box = SearchBox((-w, -w), (w, w))
    report = direct_minimize(
        lambda x: objective(problem, x[0], x[1]), box,
        max_evals=problem.max_evals, epsilon=problem.epsilon, workers=workers)
    if report.best_value >= PENALTY:
        raise NoFeasibleTransferError(
            f"no terminating transfer in {report.evaluations} evaluations")
    theta_v, theta_n = report.best_point
    log.info("best angles %.6f / %.6f deg, apogee miss %.3f km after %d evaluations",
             math.degrees(theta_v), math.degrees(theta_n),
             math.sqrt(report.best_value) / 1e3, report.evaluations)
    return evaluate(problem, theta_v, theta_n, report=report)


def evaluate(problem: TransferProblem, theta_v: float, theta_n: float,
             report: OptimizerReport | None = None) -> SolveResult:
    """Propagate one angle pair and package it like a solve result."""
    traj, stop = propagate(problem, theta_v, theta_n)
    final = traj.final
    if stop.kind == "perigee_reached":
        obj, apogee = _apogee_miss_sq(problem, traj.states[-1])
    else:
        obj, apogee = PENALTY, math.nan
    return SolveResult(
        theta_v=theta_v,
        theta_n=theta_n,
        t_f=traj.t_final,
        m_f=final.m,
        delta_v=delta_v(problem.vehicle, final.m),
        revolutions=traj.revolutions,
        eclipse_time=traj.eclipse_time,
        objective=obj,
        evaluations=report.evaluations if report else 1,
        stop=stop,
        apogee_alt=apogee,
        trajectory=traj,
        report=report,
    )


__all__ = [
    "SolveResult",
    "TransferProblem",
    "evaluate",
    "gto_to_geo",
    "objective",
    "solve",
    "stop_condition",
]
