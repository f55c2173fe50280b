import math

import numpy as np
import pytest

from gait_lab import (
    PendulumState,
    Side,
    WalkerParams,
    advance_gait,
    initial_walker_state,
    kick_force,
    lip_accel,
    lip_closed_form,
    orbital_energy,
    pendulum_derivative,
    simulate_walker,
)
from gait_lab.errors import SingularConfiguration, SingularKick
from gait_lab.integrator import OdeSystem, integrate_step
from gait_lab.walker import LegPhase

G = 9.81


def test_params_validation():
    with pytest.raises(ValueError, match="^M "):
        WalkerParams(M=0.0)
    with pytest.raises(ValueError, match="^lean "):
        WalkerParams(lean=0.6)
    with pytest.raises(ValueError, match="lean must be smaller"):
        WalkerParams(lean=0.4, step_angle=0.3)
    with pytest.raises(ValueError, match="^swing_rate_max "):
        WalkerParams(swing_rate_max=-1.0)
    # boundary cases the simulations rely on
    WalkerParams(lean=0.0)
    WalkerParams(swing_rate_max=0.0)


# --- pendulum -------------------------------------------------------------------


def test_pendulum_upright_equilibrium():
    p = WalkerParams(M=1.0)
    d = pendulum_derivative(PendulumState(1.0, 0.0, 0.0, 0.0), 0.0, p.M * p.g, p)
    assert np.allclose(d, 0.0, atol=1e-12)


def test_pendulum_hand_substitution():
    p = WalkerParams(M=1.0)
    d = pendulum_derivative(PendulumState(1.0, 0.1, 0.0, 0.0), 0.0, 0.0, p)
    assert d[1] == pytest.approx(G * math.sin(0.1), abs=1e-12)  # ~0.97937
    assert d[3] == pytest.approx(-G * math.cos(0.1), abs=1e-12)  # ~-9.76100


def test_pendulum_rejects_collapsed_leg():
    with pytest.raises(SingularConfiguration):
        pendulum_derivative(PendulumState(0.0, 0.1, 0.0, 0.0), 0.0, 0.0, WalkerParams())


def _pendulum_energy(y, p):
    r, theta, thetadot = y[2], y[0], y[1]
    return 0.5 * p.M * r * r * thetadot * thetadot + p.M * p.g * r * math.cos(theta)


@pytest.mark.parametrize("tau", [0.0, 0.3])
def test_pendulum_work_energy_balance(tau):
    # with f chosen to hold r constant, the energy change equals the work
    # input, computed here by trapezoidal quadrature of the applied power
    p = WalkerParams(M=1.0)

    def deriv(t, y):
        s = PendulumState(r=y[2], theta=y[0], rdot=y[3], thetadot=y[1])
        f = p.M * (p.g * math.cos(s.theta) - s.r * s.thetadot**2)
        return pendulum_derivative(s, tau, f, p)

    sys4 = OdeSystem(4, deriv)
    h = 1e-4
    y = np.array([0.1, 0.0, 1.0, 0.0])  # [theta, thetadot, r, rdot]
    t = 0.0
    e0 = _pendulum_energy(y, p)
    work = 0.0
    prev_power = tau * y[1]
    for _ in range(round(1.0 / h)):
        y = integrate_step(sys4, t, y, h)
        t += h
        power = tau * y[1]  # f does no work while r is held
        work += 0.5 * (prev_power + power) * h
        prev_power = power
    assert abs(y[2] - 1.0) < 1e-9  # r held constant
    de = _pendulum_energy(y, p) - e0
    assert abs(de - work) < 1e-6


# --- kick force ------------------------------------------------------------------


def test_kick_force_vertical_leg():
    assert kick_force(0.0, WalkerParams(M=80.0)) == pytest.approx(784.8, abs=1e-9)


def test_kick_force_inclined_leg():
    assert kick_force(math.pi / 3, WalkerParams(M=1.0)) == pytest.approx(19.62, abs=1e-9)


def test_kick_force_horizontal_residual():
    # the leftover horizontal push is M*g*tan(theta)
    p = WalkerParams(M=2.0)
    theta = 0.4
    assert kick_force(theta, p) * math.sin(theta) == pytest.approx(
        p.M * p.g * math.tan(theta), abs=1e-9
    )


@pytest.mark.parametrize("theta", [math.pi / 2, -math.pi / 2, 2.0])
def test_kick_force_singularity_raises(theta):
    # raises, never returns a non-finite number
    with pytest.raises(SingularKick):
        kick_force(theta, WalkerParams())


# --- constant-height pendulum ------------------------------------------------------


def test_lip_accel_values():
    p = WalkerParams(z_c=1.0)
    assert lip_accel(0.0, p) == 0.0
    assert lip_accel(0.1, p) == pytest.approx(0.981, abs=1e-12)
    for x in (-0.4, -0.01, 0.02, 0.5):
        assert math.copysign(1.0, lip_accel(x, p)) == math.copysign(1.0, x)


def test_lip_closed_form_initial_condition():
    p = WalkerParams()
    x, xd = lip_closed_form(0.12, -0.3, 0.0, p)
    assert (x, xd) == (0.12, -0.3)


def test_lip_closed_form_frozen_value():
    # 0.1*cosh(0.5*sqrt(9.81)), evaluated independently
    p = WalkerParams(z_c=1.0)
    x, _ = lip_closed_form(0.1, 0.0, 0.5, p)
    assert x == pytest.approx(0.2498274772147942, abs=1e-15)


def _integrate_lip(x0, xd0, t_end, p, h=1e-4):
    sys2 = OdeSystem(2, lambda t, y: np.array([y[1], lip_accel(y[0], p)]))
    y = np.array([x0, xd0])
    t = 0.0
    for _ in range(round(t_end / h)):
        y = integrate_step(sys2, t, y, h)
        t += h
    return y


def test_lip_closed_form_matches_integration():
    p = WalkerParams()
    y = _integrate_lip(0.1, 0.0, 1.0, p)
    x_cf, xd_cf = lip_closed_form(0.1, 0.0, 1.0, p)
    assert abs(y[0] - x_cf) < 1e-7
    assert abs(y[1] - xd_cf) < 1e-7


def test_orbital_energy_conserved():
    p = WalkerParams()
    e0 = orbital_energy(0.1, 0.4, p)
    # closed form conserves it to near machine precision
    for t in np.linspace(0.0, 1.0, 11):
        x, xd = lip_closed_form(0.1, 0.4, float(t), p)
        assert abs(orbital_energy(x, xd, p) - e0) < 1e-9
    # the integrator conserves it within tolerance
    y = _integrate_lip(0.1, 0.4, 1.0, p)
    assert abs(orbital_energy(y[0], y[1], p) - e0) < 1e-6


# --- gait machine --------------------------------------------------------------------


def test_stride_cycle_closure():
    # one stride period: support returns to the start after exactly 2 swaps
    p = WalkerParams()
    w = initial_walker_state(p, 0.0, 1.0)
    dt = 1e-3
    swaps = 0
    support = w.support
    for _ in range(round(p.stride_period / dt)):
        w, _ = advance_gait(w, dt, p)
        if w.support is not support:
            swaps += 1
            support = w.support
    assert swaps == 2
    assert w.support is Side.LEFT


def test_leg_state_sequence_over_one_stride():
    p = WalkerParams()
    w = initial_walker_state(p, 0.0, 1.0)
    dt = 1e-3
    seq = [w.phase(Side.LEFT)]
    for _ in range(round(p.stride_period / dt)):
        w, _ = advance_gait(w, dt, p)
        if w.phase(Side.LEFT) is not seq[-1]:
            seq.append(w.phase(Side.LEFT))
    assert [s.value for s in seq] == [
        "stance-plant",
        "push-off",
        "swing",
        "landing",
        "stance-plant",
    ]


def test_three_machines_per_leg_phase_locked():
    p = WalkerParams()
    w = initial_walker_state(p, 0.0, 1.0)
    for _ in range(1500):
        w, _ = advance_gait(w, 1e-3, p)
        for side in (Side.LEFT, Side.RIGHT):
            hip, knee, foot = w.leg(side)
            assert hip.state is knee.state is foot.state
            assert hip.time_in_state == knee.time_in_state == foot.time_in_state


def test_swing_hip_rate_is_clamped():
    # cap below the schedule rate: emitted hip targets respect the cap
    p = WalkerParams(swing_rate_max=1.5)
    w = initial_walker_state(p, 0.0, 1.0)
    dt = 1e-3
    prev_hip = None
    for _ in range(round(2.0 / dt)):
        w, targets = advance_gait(w, dt, p)
        side = w.support.other
        if w.phase(side) is LegPhase.SWING:
            hip = (targets.left if side is Side.LEFT else targets.right).hip
            if prev_hip is not None:
                assert abs(hip - prev_hip) <= p.swing_rate_max * dt + 1e-9
            prev_hip = hip
        else:
            prev_hip = None


def test_trunk_lean_target_held():
    p = WalkerParams(lean=0.13)
    w = initial_walker_state(p, 0.0, 1.0)
    for _ in range(100):
        w, targets = advance_gait(w, 1e-3, p)
        assert targets.lean == 0.13


def test_advance_gait_rejects_bad_dt():
    p = WalkerParams()
    w = initial_walker_state(p, 0.0, 1.0)
    with pytest.raises(ValueError):
        advance_gait(w, 0.0, p)


def test_handoff_flag_controls_landing_exit():
    p = WalkerParams()
    w = initial_walker_state(p, 0.0, 1.0)
    # drive the swinging leg into landing
    while w.phase(Side.RIGHT) is not LegPhase.LANDING:
        w, _ = advance_gait(w, 1e-3, p)
    held, _ = advance_gait(w, 10.0 * p.stride_period, p, handoff=False)
    assert held.phase(Side.RIGHT) is LegPhase.LANDING  # held open indefinitely
    swapped, _ = advance_gait(w, 1e-3, p, handoff=True)
    assert swapped.support is Side.RIGHT
    assert swapped.phase(Side.RIGHT) is LegPhase.STANCE_PLANT


# --- coupled simulation -----------------------------------------------------------


def test_default_walk_completes_ten_strides(default_walker_trace):
    tr = default_walker_trace
    assert tr.strides_completed >= 10
    assert not tr.event_times("fall")


def test_exactly_one_support_leg_everywhere(default_walker_trace):
    tr = default_walker_trace
    for i in range(len(tr)):
        left, right = tr.left_state[i], tr.right_state[i]
        assert (left == "stance-plant") != (right == "stance-plant")


def test_zero_lean_falls():
    tr = simulate_walker(WalkerParams(lean=0.0), 10.0)
    assert tr.event_times("fall")
    assert tr.event_times("fall")[0] < 10.0


def test_frozen_swing_never_swaps_and_falls():
    tr = simulate_walker(WalkerParams(swing_rate_max=0.0), 5.0)
    assert not tr.event_times("swap")
    falls = tr.event_times("fall")
    assert falls and falls[0] < 5.0


@pytest.mark.parametrize("duration", [3.0, 7.2, 11.5])
def test_swap_count_tracks_cadence(duration):
    p = WalkerParams()
    tr = simulate_walker(p, duration)
    assert not tr.event_times("fall")
    expected = math.floor(2.0 * duration / p.stride_period)
    assert abs(len(tr.event_times("swap")) - expected) <= 1


def test_com_monotone_across_stride_boundaries(default_walker_trace):
    tr = default_walker_trace
    stride_ts = tr.event_times("swap")[1::2]
    vals = [tr.com_x[int(np.searchsorted(tr.t, t_))] for t_ in stride_ts]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_walk_speed_returns_each_step(default_walker_trace):
    # the handoff is energy-neutral: speed at each swap matches the launch
    tr = default_walker_trace
    swap_ts = tr.event_times("swap")
    speeds = [tr.com_xdot[int(np.searchsorted(tr.t, t_))] for t_ in swap_ts]
    assert max(speeds) - min(speeds) < 1e-6


def test_simulate_walker_rejects_bad_duration():
    with pytest.raises(ValueError):
        simulate_walker(WalkerParams(), 0.0)
