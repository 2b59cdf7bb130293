import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eclipse_transfer import (
    AugmentedState,
    DegenerateControlError,
    Environment,
    GrazingCrossingError,
    SingularityError,
    VehicleSpec,
    apply_costate_jump,
    hamiltonian,
    in_eclipse,
    rhs,
)
from eclipse_transfer.dynamics import (
    EARTH_RADIUS,
    GM_EARTH,
    SUN_RATE,
    gravity,
    gravity_gradient,
    optimal_thrust_direction,
    shadow_constraint,
    shadow_constraint_rate,
    sun_angle,
    switching_function,
)

from conftest import jump_residual, rel

FIELDS = ("x", "y", "vx", "vy", "m", "px", "py", "pvx", "pvy", "pm")


def random_state(rng, eps=1):
    r = rng.uniform(7e6, 4e7)
    th = rng.uniform(0, 2 * math.pi)
    v = math.sqrt(GM_EARTH / r) * rng.uniform(0.8, 1.2)
    ph = th + math.pi / 2 + rng.uniform(-0.3, 0.3)
    return AugmentedState(
        t=rng.uniform(0, 1e6), x=r * math.cos(th), y=r * math.sin(th),
        vx=v * math.cos(ph), vy=v * math.sin(ph), m=rng.uniform(800, 1000),
        px=rng.normal() * 1e-3, py=rng.normal() * 1e-3,
        pvx=rng.normal(), pvy=rng.normal(), pm=rng.uniform(10, 20), eps=eps)


# --- environment and vehicle validation -------------------------------------

@pytest.mark.parametrize("kwargs", [{"gm": 0.0}, {"earth_radius": -1.0}, {"omega_sun": -1e-9}])
def test_environment_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        Environment(**kwargs)


@pytest.mark.parametrize("kwargs", [dict(m0=0, thrust=1, ve=1), dict(m0=1, thrust=-1, ve=1),
                                    dict(m0=1, thrust=1, ve=0)])
def test_vehicle_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        VehicleSpec(**kwargs)


def test_vehicle_from_isp():
    assert VehicleSpec.from_isp(1000, 1, 1500).ve == pytest.approx(14709.975)


# --- sun angle and shadow geometry -------------------------------------------

def test_sun_angle_identity_case():
    assert sun_angle(Environment(alpha0=0.0, omega_sun=0.0), 12345.0) == 0.0


def test_sun_angle_one_day_of_apparent_motion():
    env = Environment(alpha0=math.pi, omega_sun=SUN_RATE)
    assert sun_angle(env, 86400.0) == pytest.approx(math.pi + 0.986 * math.pi / 180, rel=1e-14)


def test_sun_angle_linear():
    assert sun_angle(Environment(alpha0=1.0, omega_sun=2e-7), 5e6) == pytest.approx(2.0, rel=1e-15)


@pytest.mark.parametrize("pos,expected", [((-7.0e6, 0.0), True), ((7.0e6, 0.0), False),
                                          ((-7.0e6, 6.5e6), False)])
def test_in_eclipse_examples(pos, expected):
    env = Environment(alpha0=0.0, omega_sun=0.0)
    assert in_eclipse(env, *pos, 0.0) is expected


def test_in_eclipse_matches_two_line_form_on_grid():
    rng = np.random.default_rng(7)
    for alpha in rng.uniform(0, 2 * math.pi, 3):
        env = Environment(alpha0=alpha, omega_sun=0.0)
        grid = np.linspace(-3e7, 3e7, 100)
        for x in grid:
            for y in grid:
                psi = x * math.sin(alpha) - y * math.cos(alpha)
                d1, d2 = psi + EARTH_RADIUS, psi - EARTH_RADIUS
                anti_sun = x * math.cos(alpha) + y * math.sin(alpha) < 0
                assert in_eclipse(env, x, y, 0.0) is bool(d1 * d2 < 0 and anti_sun)


def test_shadow_constraint_examples():
    env0 = Environment(alpha0=0.0, omega_sun=0.0)
    env90 = Environment(alpha0=math.pi / 2, omega_sun=0.0)
    assert shadow_constraint(env0, 5e6, 2e6, 0.0) == -2e6
    assert shadow_constraint(env90, 5e6, 2e6, 0.0) == pytest.approx(5e6, rel=1e-15)
    assert shadow_constraint(env0, 1.23e7, -EARTH_RADIUS, 0.0) == EARTH_RADIUS


def test_shadow_rate_examples():
    s = AugmentedState(0.0, 1e7, 0.0, 0.0, -3000.0, 1000.0)
    assert shadow_constraint_rate(Environment(alpha0=0.0, omega_sun=0.0), s) == 3000.0
    s = AugmentedState(0.0, 1e7, 0.0, 0.0, 0.0, 1000.0)
    assert shadow_constraint_rate(Environment(alpha0=0.0, omega_sun=1e-7), s) == pytest.approx(1.0)


def test_shadow_rate_matches_finite_difference():
    rng = np.random.default_rng(1)
    env = Environment(alpha0=0.4, omega_sun=SUN_RATE)
    for _ in range(10):
        s = random_state(rng)
        dt = 1e-3

        def psi(t):
            return shadow_constraint(env, s.x + s.vx * (t - s.t), s.y + s.vy * (t - s.t), t)

        fd = (psi(s.t + dt) - psi(s.t - dt)) / (2 * dt)
        assert rel(fd, shadow_constraint_rate(env, s)) < 1e-6


# --- gravity ------------------------------------------------------------------

def test_gravity_at_gto_perigee(env):
    g = gravity(env, 6.878137e6, 0.0)
    assert g[0] == pytest.approx(-GM_EARTH / 6.878137e6**2, rel=1e-14)
    assert g[0] == pytest.approx(-8.4252, abs=5e-4)
    assert g[1] == 0.0


@given(st.floats(-4e7, 4e7), st.floats(-4e7, 4e7))
def test_gravity_central_symmetry_and_inverse_square(x, y):
    if math.hypot(x, y) < 1e5:
        return
    env = Environment()
    np.testing.assert_array_equal(gravity(env, -x, -y), -gravity(env, x, y))
    ratio = np.linalg.norm(gravity(env, x, y)) / np.linalg.norm(gravity(env, 2 * x, 2 * y))
    assert ratio == pytest.approx(4.0, rel=1e-12)


def test_gravity_singular_at_origin(env):
    with pytest.raises(SingularityError):
        gravity(env, 0.0, 0.0)
    with pytest.raises(SingularityError):
        gravity_gradient(env, 0.0, 0.0)


def test_gravity_gradient_finite_difference(env):
    x, y, h = 7e6, 3e6, 1.0
    fd = np.column_stack([
        (gravity(env, x + h, y) - gravity(env, x - h, y)) / (2 * h),
        (gravity(env, x, y + h) - gravity(env, x, y - h)) / (2 * h),
    ])
    G = gravity_gradient(env, x, y)
    assert np.max(np.abs(fd - G)) / np.max(np.abs(G)) < 1e-6
    assert G[0, 1] == G[1, 0]
    r = math.hypot(x, y)
    assert np.trace(G) == pytest.approx(GM_EARTH / r**3, rel=1e-12)


def test_gravity_gradient_on_axis(env):
    r = 8e6
    G = gravity_gradient(env, r, 0.0)
    assert G[0, 0] == pytest.approx(2 * GM_EARTH / r**3, rel=1e-14)
    assert G[1, 1] == pytest.approx(-GM_EARTH / r**3, rel=1e-14)


# --- control and switching function -------------------------------------------

def test_optimal_thrust_direction_examples():
    base = AugmentedState(0.0, 7e6, 0.0, 0.0, 7.5e3, 1000.0)
    np.testing.assert_array_equal(optimal_thrust_direction(replace(base, pvx=0.0, pvy=1.0)),
                                  [0.0, 1.0])
    np.testing.assert_allclose(optimal_thrust_direction(replace(base, pvx=3.0, pvy=4.0)),
                               [0.6, 0.8], rtol=1e-15)
    with pytest.raises(DegenerateControlError):
        optimal_thrust_direction(base)


@given(st.floats(1e-3, 1e3), st.floats(-math.pi, math.pi))
def test_optimal_thrust_direction_scale_invariant(k, ang):
    s = AugmentedState(0.0, 7e6, 0.0, 0.0, 7.5e3, 1000.0, pvx=math.cos(ang), pvy=math.sin(ang))
    scaled = replace(s, pvx=k * s.pvx, pvy=k * s.pvy)
    np.testing.assert_allclose(optimal_thrust_direction(scaled),
                               optimal_thrust_direction(s), atol=1e-15)


def test_switching_function_examples(vehicle):
    s = AugmentedState(0.0, 7e6, 0.0, 0.0, 7.5e3, 1000.0, pvx=0.0, pvy=1.0,
                       pm=vehicle.ve / vehicle.m0)
    assert switching_function(s, vehicle) == 0.0
    s = AugmentedState(0.0, 7e6, 0.0, 0.0, 7.5e3, 1000.0, pvx=0.0, pvy=2.0, pm=0.0)
    assert switching_function(s, vehicle) == pytest.approx(0.002, rel=1e-15)


@given(st.floats(0, 50), st.floats(1e-6, 50))
def test_switching_function_decreasing_in_pm(lo, step):
    v = VehicleSpec(1000.0, 1.0, 14710.0)
    s = AugmentedState(0.0, 7e6, 0.0, 0.0, 7.5e3, 900.0, pvx=0.3, pvy=0.8)
    hi = lo + step
    assert switching_function(replace(s, pm=hi), v) < switching_function(replace(s, pm=lo), v)


# --- right-hand side and Hamiltonian ------------------------------------------

def test_rhs_coast_has_no_mass_flow(env, vehicle, gto_state):
    d = rhs(env, vehicle, replace(gto_state, eps=0))
    assert d.m == 0.0 and d.pm == 0.0


def test_rhs_ballistic_circular(env):
    r = 7e6
    s = AugmentedState(0.0, r, 0.0, 0.0, math.sqrt(GM_EARTH / r), 1000.0)
    d = rhs(env, VehicleSpec(1000.0, 0.0, 14710.0), s)
    assert d.vx == pytest.approx(-GM_EARTH / r**2, rel=1e-14)
    assert d.vy == 0.0
    assert (d.x, d.y) == (s.vx, s.vy)


def test_rhs_thrust_terms(env, vehicle, gto_state):
    d = rhs(env, vehicle, gto_state)
    u = optimal_thrust_direction(gto_state)
    g = gravity(env, gto_state.x, gto_state.y)
    np.testing.assert_allclose([d.vx, d.vy], g + vehicle.thrust * u / gto_state.m, rtol=1e-14)
    assert d.m == -vehicle.thrust / vehicle.ve
    pv = math.hypot(gto_state.pvx, gto_state.pvy)
    assert d.pm == pytest.approx(vehicle.thrust * pv / gto_state.m**2, rel=1e-14)


def test_rhs_degenerate_control(env, vehicle, gto_state):
    with pytest.raises(DegenerateControlError):
        rhs(env, vehicle, replace(gto_state, pvx=0.0, pvy=0.0))
    rhs(env, vehicle, replace(gto_state, pvx=0.0, pvy=0.0, eps=0))  # coasting is fine


@pytest.mark.parametrize("eps", [0, 1])
def test_costate_rhs_is_minus_gradient_of_hamiltonian(env, vehicle, eps):
    rng = np.random.default_rng(11 + eps)
    for _ in range(10):
        s = random_state(rng, eps)
        d = rhs(env, vehicle, s)
        for costate, state_field in (("px", "x"), ("py", "y"), ("pvx", "vx"), ("pvy", "vy"),
                                     ("pm", "m")):
            h = 1e-6 * abs(getattr(s, state_field))
            hp = hamiltonian(env, vehicle, replace(s, **{state_field: getattr(s, state_field) + h}))
            hm = hamiltonian(env, vehicle, replace(s, **{state_field: getattr(s, state_field) - h}))
            fd = -(hp - hm) / (2 * h)
            exact = getattr(d, costate)
            if eps == 0 and costate == "pm":
                assert exact == 0.0 and abs(fd) < 1e-12
            else:
                assert rel(fd, exact) < 1e-6, (costate, fd, exact)


def test_state_rhs_is_gradient_of_hamiltonian_wrt_costate(env, vehicle, gto_state):
    d = rhs(env, vehicle, gto_state)
    for costate, state_field in (("px", "x"), ("py", "y"), ("pvx", "vx"), ("pvy", "vy"),
                                 ("pm", "m")):
        val = getattr(gto_state, costate)
        h = 1e-6 * max(abs(val), 1e-3)
        hp = hamiltonian(env, vehicle, replace(gto_state, **{costate: val + h}))
        hm = hamiltonian(env, vehicle, replace(gto_state, **{costate: val - h}))
        assert rel((hp - hm) / (2 * h), getattr(d, state_field)) < 1e-6


def test_hamiltonian_examples(env, vehicle, gto_state):
    zero = replace(gto_state, px=0.0, py=0.0, pvx=0.0, pvy=0.0, pm=0.0)
    assert hamiltonian(env, vehicle, zero) == 0.0
    s = replace(gto_state, eps=0)
    g = gravity(env, s.x, s.y)
    expected = s.px * s.vx + s.py * s.vy + s.pvx * g[0] + s.pvy * g[1]
    assert hamiltonian(env, vehicle, s) == pytest.approx(expected, rel=1e-14)


def test_control_maximizes_hamiltonian(env, vehicle):
    rng = np.random.default_rng(3)
    for _ in range(10):
        s = random_state(rng)
        g = gravity(env, s.x, s.y)
        base = s.px * s.vx + s.py * s.vy + s.pvx * g[0] + s.pvy * g[1] - vehicle.thrust * s.pm / vehicle.ve

        def h_with(u):
            return base + vehicle.thrust * (s.pvx * u[0] + s.pvy * u[1]) / s.m

        best = h_with(optimal_thrust_direction(s))
        assert best == pytest.approx(hamiltonian(env, vehicle, s), rel=1e-12)
        for a in np.linspace(0, 2 * math.pi, 360, endpoint=False):
            assert h_with((math.cos(a), math.sin(a))) <= best + 1e-15 * abs(best)


# --- costate jump ------------------------------------------------------------

def boundary_state(env, t=5.0e4, eps=1, side=-1.0, along=-1.5e7):
    """State on the shadow boundary psi = side*R_E on the anti-Sun side."""
    a = sun_angle(env, t)
    e_s = np.array([math.cos(a), math.sin(a)])
    n = np.array([math.sin(a), -math.cos(a)])  # psi = r . n
    r = -abs(along) * e_s + side * env.earth_radius * n
    v = 2500.0 * n + 900.0 * e_s
    return AugmentedState(t, r[0], r[1], v[0], v[1], 930.0, 2e-4, -5e-4, 0.6, 0.7, 13.1, eps)


def test_jump_increment_pattern_and_identity(vehicle):
    env = Environment(alpha0=2.2)
    s = boundary_state(env)
    new, ev = apply_costate_jump(env, vehicle, s, -1)
    a = sun_angle(env, s.t)
    assert ev.kind == "entry" and new.eps == 0
    assert ev.dpx == pytest.approx(-ev.mu_mult * math.sin(a), rel=1e-15)
    assert ev.dpy == pytest.approx(ev.mu_mult * math.cos(a), rel=1e-15)
    assert (new.pvx, new.pvy, new.pm, new.m, new.x, new.vx, new.t) == \
        (s.pvx, s.pvy, s.pm, s.m, s.x, s.vx, s.t)
    phi = switching_function(s, vehicle)
    assert ev.mu_mult == pytest.approx(vehicle.thrust * phi * -1 / shadow_constraint_rate(env, s))
    assert jump_residual(env, vehicle, s, new, ev) < 1e-9
    dh = hamiltonian(env, vehicle, new) - hamiltonian(env, vehicle, s)
    # independent form: the jump equals mu times the explicit time derivative of psi
    explicit = ev.mu_mult * env.omega_sun * (s.x * math.cos(a) + s.y * math.sin(a))
    assert dh == pytest.approx(explicit, rel=1e-6)


def test_jump_entry_then_exit_restores_costate(vehicle):
    env = Environment(alpha0=0.7)
    s = boundary_state(env)
    mid, _ = apply_costate_jump(env, vehicle, s, -1)
    back, _ = apply_costate_jump(env, vehicle, mid, +1)
    assert back == s


def test_jump_zero_switching_function_is_continuous(vehicle):
    env = Environment(alpha0=1.0)
    s = boundary_state(env)
    s = replace(s, pm=vehicle.ve * math.hypot(s.pvx, s.pvy) / s.m)
    new, ev = apply_costate_jump(env, vehicle, s, -1)
    assert abs(ev.mu_mult) < 1e-15 and abs(new.px - s.px) < 1e-20


def test_jump_rejects_grazing_and_bad_flags(vehicle):
    env = Environment(alpha0=0.0, omega_sun=0.0)
    s = AugmentedState(0.0, -2e7, -EARTH_RADIUS, 3000.0, 0.0, 900.0, pvx=1.0, pvy=0.0, pm=1.0)
    with pytest.raises(GrazingCrossingError):
        apply_costate_jump(env, vehicle, s, -1)
    with pytest.raises(ValueError):
        apply_costate_jump(env, vehicle, s, 0)
    with pytest.raises(ValueError):
        apply_costate_jump(env, vehicle, replace(s, eps=0), -1)
