import math

import pytest

from gait_lab import (
    FlightState,
    QuadParams,
    SlipParams,
    StopCondition,
    WalkerParams,
    simulate_crawler,
    simulate_slip,
    simulate_walker,
)

# Passive runner: no hip torque, no axial offset, no retraction.
PASSIVE = SlipParams(u_hip=0.0, u_axial=0.0, omega=0.0)


@pytest.fixture(scope="session")
def passive_params():
    return PASSIVE


@pytest.fixture(scope="session")
def bounce_trace():
    """Vertical passive bounce from apex z=1.2: the conservation workhorse."""
    initial = FlightState(x=0.0, xdot=0.0, z=1.2, zdot=0.0, theta=math.pi / 2)
    return simulate_slip(initial, PASSIVE, StopCondition(max_time=5.0, max_hops=2))


@pytest.fixture(scope="session")
def default_walker_trace():
    return simulate_walker(WalkerParams(), 10.0)


@pytest.fixture(scope="session")
def default_crawl_trace():
    """Ten crawl cycles at the default period."""
    return simulate_crawler(QuadParams(), 15.0)
