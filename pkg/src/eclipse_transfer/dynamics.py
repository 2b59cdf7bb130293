"""Planar two-body dynamics with thrust, the adjoint system and shadow geometry.

State and costate are expressed in an Earth-centred inertial frame whose
x axis points to the initial perigee.  The engine thrusts at full level along
the velocity costate whenever the vehicle is lit (``eps = 1``) and is off in
the cylindrical Earth shadow (``eps = 0``).  Crossing the shadow boundary
produces a jump of the position costate whose size is known in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from eclipse_transfer import _kernels as K
from eclipse_transfer.errors import (
    DegenerateControlError,
    GrazingCrossingError,
    SingularityError,
)

GM_EARTH = 3.986005e14  # m^3/s^2
EARTH_RADIUS = 6378137.0  # m, equatorial
SUN_RATE = math.radians(0.986) / 86400.0  # rad/s, apparent Sun motion
G0 = 9.80665  # m/s^2

GRAZING_RATE = K.GRAZING_RATE


@dataclass(frozen=True)
class Environment:
    """Central body and Sun motion."""

    gm: float = GM_EARTH
    earth_radius: float = EARTH_RADIUS
    alpha0: float = 0.0  # Sun polar angle at t = 0, rad
    omega_sun: float = SUN_RATE  # rad/s
    eclipses_enabled: bool = True

    def __post_init__(self):
        if not self.gm > 0:
            raise ValueError(f"gm must be positive, got {self.gm}")
        if not self.earth_radius > 0:
            raise ValueError(f"earth_radius must be positive, got {self.earth_radius}")
        if not self.omega_sun >= 0:
            raise ValueError(f"omega_sun must be non-negative, got {self.omega_sun}")


@dataclass(frozen=True)
class VehicleSpec:
    """Constant-thrust electric vehicle."""

    m0: float  # kg
    thrust: float  # N
    ve: float  # exhaust velocity, m/s

    def __post_init__(self):
        if not self.m0 > 0:
            raise ValueError(f"m0 must be positive, got {self.m0}")
        if not self.thrust >= 0:
            raise ValueError(f"thrust must be non-negative, got {self.thrust}")
        if not self.ve > 0:
            raise ValueError(f"ve must be positive, got {self.ve}")

    @classmethod
    def from_isp(cls, m0: float, thrust: float, isp: float) -> VehicleSpec:
        return cls(m0=m0, thrust=thrust, ve=G0 * isp)


@dataclass(frozen=True)
class AugmentedState:
    """State, costate and thrust flag at one instant.

    When returned by :func:`rhs` the numeric fields hold time derivatives
    and ``t``/``eps`` echo the evaluation point.
    """

    t: float
    x: float
    y: float
    vx: float
    vy: float
    m: float
    px: float = 0.0
    py: float = 0.0
    pvx: float = 0.0
    pvy: float = 0.0
    pm: float = 0.0
    eps: int = 1

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.vx, self.vy, self.m,
                         self.px, self.py, self.pvx, self.pvy, self.pm])

    @classmethod
    def from_array(cls, t: float, s, eps: int) -> AugmentedState:
        return cls(float(t), *(float(v) for v in s), eps=int(eps))

    @property
    def radius(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class JumpEvent:
    """Costate discontinuity applied at a shadow boundary crossing."""

    t_d: float
    delta_eps: int  # -1 entering shadow, +1 leaving it
    mu_mult: float
    dpx: float
    dpy: float

    @property
    def kind(self) -> str:
        return "entry" if self.delta_eps < 0 else "exit"


def kernel_params(env: Environment, vehicle: VehicleSpec) -> np.ndarray:
    """Pack the environment and vehicle for the compiled kernels."""
    p = np.empty(K.N_PARAMS)
    p[K.GM] = env.gm
    p[K.RE] = env.earth_radius
    p[K.ALPHA0] = env.alpha0
    p[K.OMEGA_S] = env.omega_sun
    p[K.THRUST] = vehicle.thrust
    p[K.VE] = vehicle.ve
    p[K.ECLIPSES] = 1.0 if env.eclipses_enabled else 0.0
    return p


def _geometry_params(env: Environment) -> np.ndarray:
    return kernel_params(env, VehicleSpec(m0=1.0, thrust=0.0, ve=1.0))


def sun_angle(env: Environment, t: float) -> float:
    """Sun polar angle at time ``t``; not wrapped to [0, 2pi)."""
    return env.alpha0 + env.omega_sun * t


def in_eclipse(env: Environment, x: float, y: float, t: float) -> bool:
    """Raw cylindrical-shadow test, regardless of ``env.eclipses_enabled``."""
    return bool(K.in_shadow(_geometry_params(env), float(x), float(y), float(t)))


def shadow_constraint(env: Environment, x: float, y: float, t: float) -> float:
    """Signed distance of the position from the Sun axis; boundaries at +/- R_E."""
    a = sun_angle(env, t)
    return x * math.sin(a) - y * math.cos(a)


def shadow_constraint_rate(env: Environment, state: AugmentedState) -> float:
    """Total time derivative of :func:`shadow_constraint` along the motion."""
    a = sun_angle(env, state.t)
    sa, ca = math.sin(a), math.cos(a)
    return (env.omega_sun * (state.x * ca + state.y * sa)
            + state.vx * sa - state.vy * ca)


def gravity(env: Environment, x: float, y: float) -> np.ndarray:
    r = math.hypot(x, y)
    if r == 0.0:
        raise SingularityError("gravity evaluated at r = 0")
    return -env.gm * np.array([x, y]) / r**3


def gravity_gradient(env: Environment, x: float, y: float) -> np.ndarray:
    """Jacobian of :func:`gravity` with respect to position, 1/s^2."""
    r2 = x * x + y * y
    if r2 == 0.0:
        raise SingularityError("gravity gradient evaluated at r = 0")
    rv = np.array([x, y])
    return env.gm / r2**2.5 * (3.0 * np.outer(rv, rv) - r2 * np.eye(2))


def optimal_thrust_direction(state: AugmentedState) -> np.ndarray:
    """Unit thrust vector maximizing the Hamiltonian: along the velocity costate."""
    norm = math.hypot(state.pvx, state.pvy)
    if norm == 0.0:
        raise DegenerateControlError("velocity costate is zero; thrust direction undefined")
    return np.array([state.pvx, state.pvy]) / norm


def switching_function(state: AugmentedState, vehicle: VehicleSpec) -> float:
    return math.hypot(state.pvx, state.pvy) / state.m - state.pm / vehicle.ve


def rhs(env: Environment, vehicle: VehicleSpec, state: AugmentedState) -> AugmentedState:
    """Time derivative of the augmented state (state and costate equations)."""
    if state.radius == 0.0:
        raise SingularityError("state at r = 0")
    if state.eps == 1 and vehicle.thrust > 0 and state.pvx == 0.0 and state.pvy == 0.0:
        raise DegenerateControlError("thrusting with a zero velocity costate")
    out = np.empty(K.N_STATE)
    K.rhs(kernel_params(env, vehicle), state.to_array(), state.eps, out)
    return AugmentedState.from_array(state.t, out, state.eps)


def hamiltonian(env: Environment, vehicle: VehicleSpec, state: AugmentedState) -> float:
    """Hamiltonian with the thrust direction already maximized out."""
    return float(K.hamiltonian(kernel_params(env, vehicle), state.to_array(), state.eps))


def apply_costate_jump(
    env: Environment,
    vehicle: VehicleSpec,
    state: AugmentedState,
    delta_eps: int,
) -> tuple[AugmentedState, JumpEvent]:
    """Apply the position-costate discontinuity at a shadow boundary.

    The multiplier follows from equating the Hamiltonian jump to the explicit
    time dependence of the boundary; only ``px``, ``py`` and ``eps`` change.

    Raises:
        GrazingCrossingError: if the boundary is crossed tangentially.
    """
    if delta_eps not in (-1, 1):
        raise ValueError(f"delta_eps must be -1 or +1, got {delta_eps}")
    if state.eps + delta_eps not in (0, 1):
        raise ValueError(f"cannot apply delta_eps={delta_eps} with eps={state.eps}")
    rate = shadow_constraint_rate(env, state)
    if abs(rate) <= GRAZING_RATE:
        raise GrazingCrossingError(
            f"|d(psi)/dt| = {abs(rate):.3g} m/s at t = {state.t:.3f} s")
    mu = vehicle.thrust * switching_function(state, vehicle) * delta_eps / rate
    a = sun_angle(env, state.t)
    dpx = -mu * math.sin(a)
    dpy = mu * math.cos(a)
    new = replace(state, px=state.px + dpx, py=state.py + dpy, eps=state.eps + delta_eps)
    return new, JumpEvent(t_d=state.t, delta_eps=delta_eps, mu_mult=mu, dpx=dpx, dpy=dpy)
