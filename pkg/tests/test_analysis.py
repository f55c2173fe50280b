import math

import numpy as np
import pytest

from gait_lab import SlipParams
from gait_lab.analysis import (
    ApexState,
    apex_map,
    energy_series,
    extract_curves,
    find_periodic_gait,
    total_energy,
)
from gait_lab.errors import FallDuringCycle, FixedPointNoConvergence, UnreachableTouchdown
from gait_lab.slip import HopSample, HopTrace

G = 9.81


def _single_sample_trace():
    return HopTrace(
        t=np.array([0.0]),
        phase=["flight"],
        x=np.array([0.0]),
        z=np.array([1.0]),
        xdot=np.array([0.0]),
        zdot=np.array([0.0]),
        l=np.array([1.0]),
        theta=np.array([math.pi / 2]),
        events=[],
    )


def test_extract_rejects_empty_trace():
    empty = HopTrace(
        t=np.array([]), phase=[], x=np.array([]), z=np.array([]),
        xdot=np.array([]), zdot=np.array([]), l=np.array([]), theta=np.array([]),
        events=[],
    )
    with pytest.raises(ValueError):
        extract_curves(empty)


def test_single_sample_series_have_length_one():
    curves = extract_curves(_single_sample_trace())
    for series in (curves.t, curves.x, curves.z, curves.xdot, curves.zdot, curves.l):
        assert len(series) == 1
    assert curves.path.shape == (1, 2)


def test_vertical_bounce_path_degenerates(bounce_trace):
    curves = extract_curves(bounce_trace)
    assert np.max(np.abs(curves.x)) < 1e-12
    assert curves.path[:, 0].max() - curves.path[:, 0].min() < 1e-12


def test_extraction_is_lossless(bounce_trace):
    curves = extract_curves(bounce_trace)
    assert np.array_equal(curves.t, bounce_trace.t)
    assert np.array_equal(curves.x, bounce_trace.x)
    assert np.array_equal(curves.z, bounce_trace.z)
    assert np.array_equal(curves.xdot, bounce_trace.xdot)
    assert np.array_equal(curves.zdot, bounce_trace.zdot)
    assert np.array_equal(curves.l, bounce_trace.l)
    assert np.array_equal(curves.path[:, 0], bounce_trace.x)
    assert np.array_equal(curves.path[:, 1], bounce_trace.z)


def test_leg_compression_matches_energy_oracle(bounce_trace, passive_params):
    # drop energy ends up in the spring: m*g*z0 = m*g*l_min + k*(l0-l_min)^2/2
    p = passive_params
    z0 = 1.2
    a, b, c = 0.5 * p.k, -p.k * p.l0 + p.m * p.g, 0.5 * p.k * p.l0**2 - p.m * p.g * z0
    l_min_oracle = (-b - math.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
    assert l_min_oracle < p.l0
    assert abs(bounce_trace.l.min() - l_min_oracle) < 1e-5


# --- energy ---------------------------------------------------------------------


def test_energy_at_rest_on_uncompressed_leg():
    p = SlipParams(u_hip=0.0)
    s = HopSample(0.0, "stance", 0.0, p.l0, 0.0, 0.0, p.l0, math.pi / 2)
    assert total_energy(s, p) == pytest.approx(p.m * p.g * p.l0, abs=1e-9)


def test_energy_flight_example():
    p = SlipParams(m=80.0)
    s = HopSample(0.0, "flight", 0.0, 1.0, 2.0, 0.0, 1.0, math.pi / 2)
    assert total_energy(s, p) == pytest.approx(944.8, abs=1e-9)


def test_stance_sample_includes_spring_term():
    p = SlipParams(m=1.0, k=100.0)
    s = HopSample(0.0, "stance", 0.0, 0.9, 0.0, 0.0, 0.9, math.pi / 2)
    assert total_energy(s, p) == pytest.approx(1.0 * G * 0.9 + 0.5 * 100.0 * 0.01, abs=1e-9)


def test_passive_trace_energy_constant(bounce_trace, passive_params):
    e = energy_series(bounce_trace, passive_params)
    assert np.max(np.abs(e - e[0])) / e[0] < 1e-6
    # matches the per-sample evaluation
    for i in (0, len(bounce_trace) // 2, len(bounce_trace) - 1):
        assert e[i] == pytest.approx(total_energy(bounce_trace.sample(i), passive_params))


# --- apex return map ---------------------------------------------------------------


def test_vertical_apex_is_fixed_point(passive_params):
    a0 = ApexState(z_apex=1.2, xdot_apex=0.0, theta_td=math.pi / 2)
    a1 = apex_map(a0, passive_params)
    assert abs(a1.z_apex - a0.z_apex) < 1e-5
    assert abs(a1.xdot_apex) < 1e-8


def test_apex_map_conserves_energy(passive_params):
    p = passive_params
    a0 = ApexState(z_apex=1.2, xdot_apex=0.0, theta_td=math.pi / 2)
    a1 = apex_map(a0, p)

    def apex_energy(a):
        return p.m * p.g * a.z_apex + 0.5 * p.m * a.xdot_apex**2

    assert abs(apex_energy(a1) - apex_energy(a0)) / apex_energy(a0) < 1e-6


def test_apex_below_surface_is_unreachable(passive_params):
    with pytest.raises(UnreachableTouchdown):
        apex_map(ApexState(0.5, 0.0, math.pi / 2), passive_params)


def test_horizontal_touchdown_angle_falls(passive_params):
    with pytest.raises((FallDuringCycle, UnreachableTouchdown)):
        apex_map(ApexState(1.2, 0.5, 0.0), passive_params)


def test_periodic_search_returns_vertical_fixed_point(passive_params):
    seed = ApexState(1.2, 0.0, math.pi / 2)
    fixed = find_periodic_gait(seed, passive_params)
    assert abs(fixed.z_apex - 1.2) < 1e-6
    mapped = apex_map(fixed, passive_params)
    assert abs(mapped.z_apex - fixed.z_apex) < 1e-8
    assert abs(mapped.xdot_apex - fixed.xdot_apex) < 1e-8


def test_fixed_point_cycles_do_not_drift(passive_params):
    fixed = find_periodic_gait(ApexState(1.2, 0.0, math.pi / 2), passive_params)
    a = fixed
    for _ in range(20):
        a = apex_map(a, passive_params)
    assert abs(a.z_apex - fixed.z_apex) < 1e-4


def test_search_budget_exhaustion_reported(passive_params):
    with pytest.raises(FixedPointNoConvergence):
        find_periodic_gait(
            ApexState(1.4, 0.0, math.pi / 2),
            passive_params,
            max_iterations=1,
            tol=1e-14,
        )
