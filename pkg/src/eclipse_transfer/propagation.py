"""Fixed-step DOP853 propagation with shadow events and a perigee stopping rule."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from eclipse_transfer import _kernels as K
from eclipse_transfer.dynamics import (
    AugmentedState,
    Environment,
    JumpEvent,
    VehicleSpec,
    in_eclipse,
    kernel_params,
)
from eclipse_transfer.guess import build_guess
from eclipse_transfer.orbital import initial_state

if TYPE_CHECKING:
    from eclipse_transfer.solver import TransferProblem

log = logging.getLogger(__name__)

STOP_KINDS = {
    K.STOP_PERIGEE: "perigee_reached",
    K.STOP_MAX_TIME: "max_time",
    K.STOP_ERROR: "error",
}
ERROR_MESSAGES = {
    K.ERR_IMPACT: "trajectory intersects the Earth",
    K.ERR_NONFINITE: "non-finite state during integration",
    K.ERR_GRAZING: "grazing shadow crossing (jump multiplier diverges)",
    K.ERR_DEGENERATE: "zero velocity costate while thrusting",
}

COAST_DRIFT_LIMIT = 1e-9


@dataclass(frozen=True)
class IntegratorSettings:
    """Step and event controls.

    ``max_time=None`` lets the problem pick a cap from the expected transfer
    duration.  ``rtol > 0`` switches on embedded-error sub-stepping inside each
    macro step; the default fixed step is what the transfers are tuned for.
    """

    macro_step: float = 1000.0  # s
    event_tol: float = 10.0  # s
    max_time: float | None = None  # s
    energy_check: bool = False
    rtol: float = 0.0
    guard_samples: int = K.GUARD_SAMPLES

    def __post_init__(self):
        if not 0 < self.event_tol < self.macro_step:
            raise ValueError(
                f"need 0 < event_tol < macro_step, got {self.event_tol}, {self.macro_step}")
        if self.max_time is not None and not self.max_time > 0:
            raise ValueError(f"max_time must be positive, got {self.max_time}")
        if self.rtol < 0:
            raise ValueError(f"rtol must be >= 0, got {self.rtol}")
        if self.guard_samples < 0:
            raise ValueError("guard_samples must be >= 0")


@dataclass(frozen=True)
class StopCondition:
    kind: str  # perigee_reached | max_time | error
    t_stop: float
    detail: str = ""


@dataclass(frozen=True)
class Trajectory:
    """Samples of one propagation, stored column-wise.

    Row ``i`` of ``states`` follows the ``x, y, vx, vy, m, px, py, pvx, pvy, pm``
    layout; samples at shadow crossings hold the post-jump costate.
    """

    times: np.ndarray
    states: np.ndarray
    eps: np.ndarray
    events: tuple[JumpEvent, ...]
    event_brackets: np.ndarray  # final bisection width of each event, s
    revolutions: int
    angle_swept: float  # rad
    eclipse_time: float
    thrust_time: float
    coast_drift: tuple[float, float] | None = field(default=None, compare=False)

    def __len__(self):
        return len(self.times)

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    @property
    def final(self) -> AugmentedState:
        return self.sample(-1)

    def sample(self, i: int) -> AugmentedState:
        return AugmentedState.from_array(self.times[i], self.states[i], self.eps[i])

    @property
    def samples(self) -> list[AugmentedState]:
        return [self.sample(i) for i in range(len(self.times))]

    def coast_arc_drift(self, env: Environment) -> tuple[float, float]:
        """Largest relative change of energy and angular momentum over a coast step."""
        s = self.states
        r = np.hypot(s[:, 0], s[:, 1])
        energy = 0.5 * (s[:, 2] ** 2 + s[:, 3] ** 2) - env.gm / r
        hmom = s[:, 0] * s[:, 3] - s[:, 1] * s[:, 2]
        coast = self.eps[:-1] == 0
        if not coast.any():
            return 0.0, 0.0
        de = np.abs(np.diff(energy))[coast] / np.abs(energy[:-1][coast])
        dh = np.abs(np.diff(hmom))[coast] / np.abs(hmom[:-1][coast])
        return float(de.max()), float(dh.max())


def rk8_step(env: Environment, vehicle: VehicleSpec, state: AugmentedState,
             h: float) -> AugmentedState:
    """One eighth-order Dormand-Prince step with the thrust flag held fixed."""
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    out = np.empty(K.N_STATE)
    k = np.empty((K.N_STAGES, K.N_STATE))
    K.rk8_step(kernel_params(env, vehicle), state.to_array(), state.eps, h, k, out)
    return AugmentedState.from_array(state.t + h, out, state.eps)


def detect_boundary_crossing(
    env: Environment,
    vehicle: VehicleSpec,
    state_a: AugmentedState,
    state_b: AugmentedState,
    event_tol: float = 10.0,
    guard_samples: int = K.GUARD_SAMPLES,
) -> float | None:
    """First time in ``(t_a, t_b]`` where the shadow test disagrees with ``state_a.eps``.

    The crossing is bracketed by re-integrating from ``state_a`` and bisecting
    down to ``event_tol``; the returned time is the far end of the bracket.
    Interior points of the step are screened with a cubic Hermite position
    interpolant so that a shadow passage shorter than the step is still caught.
    """
    if not state_b.t > state_a.t:
        raise ValueError("state_b must be later than state_a")
    k = np.empty((K.N_STAGES, K.N_STATE))
    found, t_hi, _, _ = K.find_crossing(
        kernel_params(env, vehicle), state_a.to_array(), state_a.t, state_a.eps,
        state_b.t - state_a.t, state_b.to_array(), event_tol, guard_samples, k, 0.0)
    return float(t_hi) if found else None


def initial_augmented_state(problem: TransferProblem, theta_v: float,
                            theta_n: float) -> AugmentedState:
    env = problem.env
    x, y, vx, vy = initial_state(env, problem.initial_orbit)
    g = build_guess(env, problem.vehicle, math.hypot(x, y), theta_v, theta_n)
    eps = 0 if env.eclipses_enabled and in_eclipse(env, x, y, 0.0) else 1
    return AugmentedState(0.0, x, y, vx, vy, problem.vehicle.m0,
                          g.pr0[0], g.pr0[1], g.pv0[0], g.pv0[1], g.pm0, eps)


def run_kernel(problem: TransferProblem, theta_v: float, theta_n: float, record: bool):
    """Raw kernel output for one propagation (see ``_kernels.propagate_kernel``)."""
    s0 = initial_augmented_state(problem, theta_v, theta_n)
    settings = problem.integrator
    target_rp = problem.env.earth_radius + problem.target.perigee_alt
    return K.propagate_kernel(
        kernel_params(problem.env, problem.vehicle), s0.to_array(), s0.eps,
        settings.macro_step, settings.event_tol, problem.max_time(), target_rp,
        settings.guard_samples, settings.rtol, record)


def stop_condition(kind_code: int, err_code: int, t: float) -> StopCondition:
    return StopCondition(STOP_KINDS[kind_code], float(t), ERROR_MESSAGES.get(err_code, ""))


def propagate(problem: TransferProblem, theta_v: float,
              theta_n: float) -> tuple[Trajectory, StopCondition]:
    """Propagate the extremal defined by the two costate angles (radians).

    Integration runs macro step by macro step, stops at each shadow crossing
    to apply the costate jump, and ends when the osculating perigee reaches
    the target altitude, at ``max_time``, or on a numerical failure.
    """
    (kind, err, t, _, _, thrust_time, eclipse_time, angle,
     samples, n_samples, events, n_events) = run_kernel(problem, theta_v, theta_n, True)
    samples = samples[:n_samples]
    events = events[:n_events]
    jumps = tuple(
        JumpEvent(t_d=float(e[0]), delta_eps=int(e[1]), mu_mult=float(e[2]),
                  dpx=float(e[3]), dpy=float(e[4]))
        for e in events)
    traj = Trajectory(
        times=samples[:, 0].copy(),
        states=samples[:, 2:].copy(),
        eps=samples[:, 1].astype(np.int8),
        events=jumps,
        event_brackets=events[:, 5].copy(),
        revolutions=int(math.floor(angle / (2.0 * math.pi))),
        angle_swept=float(angle),
        eclipse_time=float(eclipse_time),
        thrust_time=float(thrust_time),
    )
    if problem.integrator.energy_check:
        drift = traj.coast_arc_drift(problem.env)
        object.__setattr__(traj, "coast_drift", drift)
        if max(drift) > COAST_DRIFT_LIMIT:
            log.warning("coast-arc invariant drift %.3g / %.3g exceeds %.0e",
                        drift[0], drift[1], COAST_DRIFT_LIMIT)
    return traj, stop_condition(kind, err, t)
