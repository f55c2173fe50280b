import math

import numpy as np
import pytest

from gait_lab import (
    ContactForces,
    DriveSide,
    QuadParams,
    SwingAngles,
    advance_crawl,
    force_balance,
    group_angles,
    initial_crawl_state,
    load_split,
    simulate_crawler,
)
from gait_lab.errors import InfeasibleGeometry, TippingInfeasible

G = 9.81


def test_params_validation():
    with pytest.raises(ValueError, match="^m_F "):
        QuadParams(m_F=0.0)
    with pytest.raises(ValueError, match="^drive_angle_amp "):
        QuadParams(drive_angle_amp=2.0)
    # back-heavy sets are constructible; they fail dynamically, not here
    QuadParams(m_F=2.5, m_H=4.0)


def test_group_angles_sums():
    assert group_angles(SwingAngles(0, 0, 0, 0)) == (0.0, 0.0)
    assert group_angles(SwingAngles(0.2, 0.3, 0.1, 0.4)) == (0.5, 0.5)


def test_group_angles_commute():
    a = SwingAngles(0.2, 0.3, 0.1, 0.4)
    b = SwingAngles(0.3, 0.2, 0.1, 0.4)
    assert group_angles(a)[0] == group_angles(b)[0]


def test_contact_forces_must_be_nonnegative():
    with pytest.raises(ValueError):
        ContactForces(-1.0, 0.0)


# --- force balance ---------------------------------------------------------------


def test_force_balance_symmetric_equilibrium():
    p = QuadParams(m_F=5.0, m_H=5.0)
    a = SwingAngles(math.pi / 4, 0.0, 0.0, math.pi / 4)
    f_mag = p.total_mass * G / (math.cos(math.pi / 4) + math.sin(math.pi / 4))
    xdd, resid = force_balance(ContactForces(f_mag, f_mag), a, p)
    assert abs(xdd) < 1e-12
    assert abs(resid) < 1e-9


def test_force_balance_free_fall_residual():
    p = QuadParams()
    a = SwingAngles(0.2, 0.0, 0.0, 1.0)
    xdd, resid = force_balance(ContactForces(0.0, 0.0), a, p)
    assert xdd == 0.0
    assert resid == pytest.approx(-p.total_mass * G, abs=1e-12)


def test_degenerate_geometry_reported_by_load_split():
    # fore leg horizontal-force-only and hind with no vertical projection:
    # the vertical balance has no finite solution
    p = QuadParams(m_F=6.0, m_H=4.0)
    a = SwingAngles(math.pi / 2, 0.0, 0.0, 0.0)
    with pytest.raises(InfeasibleGeometry):
        load_split(a, 0.3, -0.3, 0.0, p)


# --- load split -------------------------------------------------------------------


def test_load_split_midpoint_symmetric():
    p = QuadParams()
    a = SwingAngles(math.pi / 4, 0.0, 0.0, math.pi / 4)
    f = load_split(a, 0.3, -0.3, 0.0, p)
    assert f.f_FR == pytest.approx(f.f_HL, rel=1e-12)


def test_load_split_lever_arm_ratio():
    # CoM three quarters of the way to the fore contact
    p = QuadParams()
    a = SwingAngles(0.3, 0.0, 0.0, 1.2)
    f = load_split(a, 1.0, -1.0, 0.5, p)
    weight = p.total_mass * G
    assert f.f_FR * math.cos(0.3) == pytest.approx(0.75 * weight, rel=1e-12)
    assert f.f_HL * math.sin(1.2) == pytest.approx(0.25 * weight, rel=1e-12)


@pytest.mark.parametrize("q11,q24", [(0.1, 1.3), (0.4, 1.0), (-0.2, 1.4), (0.78, 0.8)])
def test_load_split_closes_vertical_balance(q11, q24):
    p = QuadParams()
    a = SwingAngles(q11, 0.0, 0.0, q24)
    f = load_split(a, 0.4, -0.35, 0.05, p)
    _, resid = force_balance(f, a, p)
    assert abs(resid) < 1e-9
    assert f.f_FR >= 0.0 and f.f_HL >= 0.0


def test_load_split_tipping_outside_span():
    p = QuadParams()
    a = SwingAngles(0.3, 0.0, 0.0, 1.2)
    with pytest.raises(TippingInfeasible):
        load_split(a, 0.3, -0.3, 0.4, p)
    with pytest.raises(TippingInfeasible):
        load_split(a, 0.3, -0.3, -0.35, p)


def test_mirror_configuration_negates_acceleration():
    # mirroring swaps fore/hind roles; the angle conventions swap with them
    # (each q maps to pi/2 - q), and the acceleration changes sign exactly
    p = QuadParams(m_F=4.0, m_H=2.5)
    pm = QuadParams(m_F=2.5, m_H=4.0)
    a = SwingAngles(0.31, 0.0, 0.0, 1.18)
    am = SwingAngles(math.pi / 2 - 1.18, 0.0, 0.0, math.pi / 2 - 0.31)
    fore, hind, com = 0.42, -0.30, 0.04
    f = load_split(a, fore, hind, com, p)
    fm = load_split(am, -hind, -fore, -com, pm)
    xdd, _ = force_balance(f, a, p)
    xddm, _ = force_balance(fm, am, pm)
    assert xddm == pytest.approx(-xdd, abs=1e-12)


# --- gait ------------------------------------------------------------------------


def test_drive_alternates_twice_per_period():
    p = QuadParams()
    s = initial_crawl_state(p)
    dt = 1e-3
    sides = [s.drive]
    for _ in range(round(p.crawl_period / dt)):
        s = advance_crawl(s, dt, p)
        if s.drive is not sides[-1]:
            sides.append(s.drive)
    assert len(sides) == 3  # two alternations
    assert sides[0] is DriveSide.FRONT_RIGHT_SWING
    assert sides[1] is DriveSide.FRONT_LEFT_SWING
    assert sides[2] is DriveSide.FRONT_RIGHT_SWING


def test_advance_crawl_rejects_bad_dt():
    p = QuadParams()
    with pytest.raises(ValueError):
        advance_crawl(initial_crawl_state(p), -1e-3, p)


def test_simulate_rejects_zero_duration():
    with pytest.raises(ValueError):
        simulate_crawler(QuadParams(), 0.0)


# --- default crawl properties -------------------------------------------------------


def test_default_crawl_never_tips(default_crawl_trace):
    assert not default_crawl_trace.event_times("fall")
    assert len(default_crawl_trace.event_times("swap")) == 20  # 2 per cycle


def test_net_forward_displacement_per_cycle(default_crawl_trace):
    tr = default_crawl_trace
    T = QuadParams().crawl_period
    for k in range(10):
        i0 = int(np.searchsorted(tr.t, k * T))
        i1 = min(int(np.searchsorted(tr.t, (k + 1) * T)), len(tr) - 1)
        assert tr.com_x[i1] - tr.com_x[i0] > 0.0


def test_vertical_balance_residual_every_sample(default_crawl_trace):
    tr = default_crawl_trace
    p = QuadParams()
    worst = 0.0
    for i in range(len(tr)):
        a = SwingAngles(tr.q11[i], tr.q12[i], tr.q23[i], tr.q24[i])
        f = ContactForces(tr.f_FR[i], tr.f_HL[i])
        _, resid = force_balance(f, a, p)
        worst = max(worst, abs(resid))
    assert worst < 1e-9


def test_recorded_acceleration_recomputes(default_crawl_trace):
    tr = default_crawl_trace
    p = QuadParams()
    for i in range(0, len(tr), 7):
        a = SwingAngles(tr.q11[i], tr.q12[i], tr.q23[i], tr.q24[i])
        f = ContactForces(tr.f_FR[i], tr.f_HL[i])
        xdd, _ = force_balance(f, a, p)
        assert abs(xdd - tr.xddot[i]) < 1e-12


def test_group_angle_traces_bounded(default_crawl_trace):
    tr = default_crawl_trace
    bound = 2.0 * QuadParams().drive_angle_amp
    q1 = tr.q11 + tr.q12
    q2 = tr.q23 + tr.q24
    assert np.all(np.abs(q1) <= bound + 1e-12)
    assert np.all(np.abs(q2) <= bound + 1e-12)


def test_contact_forces_stay_unilateral(default_crawl_trace):
    tr = default_crawl_trace
    assert np.all(tr.f_FR >= 0.0)
    assert np.all(tr.f_HL >= 0.0)


def test_back_heavy_tips_within_two_cycles():
    p = QuadParams(m_F=2.5, m_H=4.0)
    tr = simulate_crawler(p, 15.0)
    falls = tr.event_times("fall")
    assert falls and falls[0] < 2.0 * p.crawl_period
