"""Post-processing for runner traces: curves, energy audit, return maps."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import FallDuringCycle, FixedPointNoConvergence, UnreachableTouchdown
from .integrator import integrate_until_first_event
from .slip import (
    FlightState,
    HopSample,
    HopTrace,
    Phase,
    SlipParams,
    StanceState,
    _flight_system,
    _stance_system,
    flight_guards,
    flight_to_stance,
    stance_guards,
    stance_to_flight,
)


@dataclass(frozen=True)
class KinematicCurves:
    """The six kinematic series of a run, on the trace's common time base.

    During flight the leg is uncompressed, so ``l`` reads the rest length
    there and the axial-displacement curve is continuous.
    """

    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    xdot: np.ndarray
    zdot: np.ndarray
    path: np.ndarray  # (n, 2) CoM positions in the x-z plane
    l: np.ndarray


@dataclass(frozen=True)
class ApexState:
    """Poincare section state at the flight apex (zdot = 0, descending next).

    ``theta_td`` is the leg angle commanded for the next touchdown.
    """

    z_apex: float
    xdot_apex: float
    theta_td: float


def extract_curves(trace: HopTrace) -> KinematicCurves:
    """Pull the six kinematic curves out of a trace (lossless copies)."""
    if len(trace) == 0:
        raise ValueError("cannot extract curves from an empty trace")
    return KinematicCurves(
        t=trace.t.copy(),
        x=trace.x.copy(),
        z=trace.z.copy(),
        xdot=trace.xdot.copy(),
        zdot=trace.zdot.copy(),
        path=np.column_stack([trace.x, trace.z]),
        l=trace.l.copy(),
    )


def total_energy(sample: HopSample, p: SlipParams) -> float:
    """Mechanical energy of one sample: kinetic + gravitational (+ spring in stance)."""
    e = 0.5 * p.m * (sample.xdot**2 + sample.zdot**2) + p.m * p.g * sample.z
    if sample.phase == Phase.STANCE.value:
        e += 0.5 * p.k * (p.l0 - sample.l) ** 2
    return e


def energy_series(trace: HopTrace, p: SlipParams) -> np.ndarray:
    """Vectorized :func:`total_energy` over a whole trace."""
    e = 0.5 * p.m * (trace.xdot**2 + trace.zdot**2) + p.m * p.g * trace.z
    stance = np.array([ph == Phase.STANCE.value for ph in trace.phase])
    return e + stance * 0.5 * p.k * (p.l0 - trace.l) ** 2


def apex_map(a: ApexState, p: SlipParams, *, step: float = 1e-4) -> ApexState:
    """Advance one full cycle (descend, stance, ascend) apex to apex.

    The leg is held at the commanded angle ``theta_td`` through the descent
    (leg placement is the control here, so any retraction rate in ``p`` is
    overridden for the map).  Raises ``UnreachableTouchdown`` when the apex
    is not above the touchdown surface and ``FallDuringCycle`` when the
    cycle hits a fall condition before the next apex.
    """
    surface = p.l0 * math.sin(a.theta_td)
    if not a.z_apex > surface:
        raise UnreachableTouchdown(
            f"apex height {a.z_apex} is not above the touchdown surface {surface:.6f}"
        )
    held = replace(p, omega=0.0)
    flight_sys = _flight_system(held)
    stance_sys = _stance_system(held)
    fg, sg = flight_guards(held), stance_guards(held)

    # descent to touchdown
    y = np.array([0.0, a.xdot_apex, a.z_apex, 0.0, a.theta_td])
    t_cap = 10.0 * math.sqrt(2.0 * a.z_apex / held.g) + 1.0
    names = ["touchdown", "fall"]
    idx, outcome = integrate_until_first_event(
        flight_sys, [fg[n] for n in names], 0.0, y, step, t_cap
    )
    if idx is None or names[idx] == "fall":
        raise FallDuringCycle("fell during descent")
    fs = FlightState.from_array(outcome.state)
    if fs.zdot >= 0.0:
        raise FallDuringCycle("touchdown reached without downward velocity")
    ss, foot_x = flight_to_stance(fs, held)

    # stance to liftoff
    names = ["liftoff", "fall_len", "fall_height"]
    idx, outcome = integrate_until_first_event(
        stance_sys, [sg[n] for n in names], outcome.time, ss.as_array(), step,
        outcome.time + 30.0,
    )
    if idx is None or names[idx] != "liftoff":
        raise FallDuringCycle("fell during stance")
    fs = stance_to_flight(StanceState.from_array(outcome.state), foot_x, held)
    if fs.zdot <= 0.0:
        raise FallDuringCycle("liftoff without upward velocity")

    # ascent to the next apex
    names = ["apex", "fall"]
    idx, outcome = integrate_until_first_event(
        flight_sys, [fg[n] for n in names], outcome.time, fs.as_array(), step,
        outcome.time + t_cap,
    )
    if idx is None or names[idx] != "apex":
        raise FallDuringCycle("fell before reaching the next apex")
    nxt = FlightState.from_array(outcome.state)
    return ApexState(z_apex=nxt.z, xdot_apex=nxt.xdot, theta_td=a.theta_td)


def find_periodic_gait(
    seed: ApexState,
    p: SlipParams,
    *,
    step: float = 1e-4,
    tol: float = 1e-8,
    max_iterations: int = 200,
    damping: float = 0.5,
) -> ApexState:
    """Damped fixed-point iteration of :func:`apex_map` on (z, xdot).

    The touchdown angle is held fixed as the control.  Converges when the
    map residual drops below ``tol`` in both components; raises
    ``FixedPointNoConvergence`` after ``max_iterations``.
    """
    z, xd = seed.z_apex, seed.xdot_apex
    for _ in range(max_iterations):
        mapped = apex_map(ApexState(z, xd, seed.theta_td), p, step=step)
        rz, rx = mapped.z_apex - z, mapped.xdot_apex - xd
        if max(abs(rz), abs(rx)) < tol:
            return ApexState(z, xd, seed.theta_td)
        z += damping * rz
        xd += damping * rx
    raise FixedPointNoConvergence(
        f"no periodic gait within {max_iterations} iterations (residual {max(abs(rz), abs(rx)):.3e})"
    )
