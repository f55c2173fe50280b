"""Spring-mass running model: a point mass on a massless springy leg.

The model alternates two charts:

  * flight — ballistic CoM with state ``[x, xdot, z, zdot, theta]``; the leg
    is uncompressed and rotates at the constant retraction rate ``omega``.
  * stance — foot pinned to the ground, polar state ``[theta, thetadot, l,
    ldot]`` about the foot.

``theta`` is the leg angle measured from the ground plane (positive x axis),
counterclockwise, so the CoM sits at ``foot + l*(-cos(theta), sin(theta))``
and a leg with ``theta < pi/2`` has its foot ahead of the CoM.  With this
convention gravity contributes ``-g*sin(theta)`` along the leg and
``-g*cos(theta)`` tangentially, matching the stance equations below.

Touchdown happens when the foot ray reaches the ground (``z = l0*sin(theta)``
while descending), liftoff when the spring returns to rest length while
extending.  Both transitions preserve the Cartesian CoM state exactly (the
round trip flight -> stance -> flight is an identity to rounding).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import IntegrationDiverged, InvalidTransition, SingularConfiguration
from .integrator import (
    Guard,
    GuardDirection,
    OdeSystem,
    integrate_until_first_event,
)

DEFAULT_STEP = 1e-4
TRANSITION_TOL = 1e-8
# Termination thresholds that stop the run before the mass grinds through
# the ground or the spring collapses.
FALL_HEIGHT_FRACTION = 0.05
FALL_LENGTH_FRACTION = 0.1


class Phase(enum.Enum):
    FLIGHT = "flight"
    STANCE = "stance"


@dataclass(frozen=True)
class SlipParams:
    """Constants of the runner.

    ``omega`` is the flight leg-retraction rate; the spring's own natural
    frequency is ``sqrt(k/m)`` and is a separate quantity.  ``u_hip`` is a
    constant hip torque applied in stance and ``u_axial`` a constant offset
    added to the spring's rest length, so ``(0.0, 0.0)`` is the passive
    model and the default ``(0.0, 1.5)`` the actively driven one.
    """

    m: float = 80.0
    k: float = 20000.0
    l0: float = 1.0
    g: float = 9.81
    omega: float = 0.0
    u_hip: float = 1.5
    u_axial: float = 0.0

    def __post_init__(self):
        for name in ("m", "k", "l0", "g"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive (got {getattr(self, name)})")


@dataclass(frozen=True)
class FlightState:
    """Airborne CoM state; ``theta`` is the current leg angle."""

    x: float
    xdot: float
    z: float
    zdot: float
    theta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.xdot, self.z, self.zdot, self.theta])

    @staticmethod
    def from_array(y: np.ndarray) -> "FlightState":
        return FlightState(float(y[0]), float(y[1]), float(y[2]), float(y[3]), float(y[4]))


@dataclass(frozen=True)
class StanceState:
    """Polar state about the pinned foot."""

    theta: float
    thetadot: float
    l: float
    ldot: float

    def as_array(self) -> np.ndarray:
        return np.array([self.theta, self.thetadot, self.l, self.ldot])

    @staticmethod
    def from_array(y: np.ndarray) -> "StanceState":
        return StanceState(float(y[0]), float(y[1]), float(y[2]), float(y[3]))


class HopSample(NamedTuple):
    t: float
    phase: str
    x: float
    z: float
    xdot: float
    zdot: float
    l: float
    theta: float


@dataclass(frozen=True)
class TraceEvent:
    t: float
    kind: str  # touchdown | liftoff | apex | fall


@dataclass
class HopTrace:
    """Time-indexed record of a run; one row per integration step."""

    t: np.ndarray
    phase: list[str]
    x: np.ndarray
    z: np.ndarray
    xdot: np.ndarray
    zdot: np.ndarray
    l: np.ndarray
    theta: np.ndarray
    events: list[TraceEvent] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.t)

    def sample(self, i: int) -> HopSample:
        return HopSample(
            float(self.t[i]),
            self.phase[i],
            float(self.x[i]),
            float(self.z[i]),
            float(self.xdot[i]),
            float(self.zdot[i]),
            float(self.l[i]),
            float(self.theta[i]),
        )

    def event_times(self, kind: str) -> list[float]:
        return [e.t for e in self.events if e.kind == kind]


@dataclass(frozen=True)
class StopCondition:
    """Run limits: wall-clock model time and number of completed stances."""

    max_time: float = 10.0
    max_hops: int = 10

    def __post_init__(self):
        if self.max_time <= 0.0:
            raise ValueError(f"max_time must be positive (got {self.max_time})")
        if self.max_hops < 0:
            raise ValueError(f"max_hops must be non-negative (got {self.max_hops})")


# --- dynamics ---------------------------------------------------------------


def flight_derivative(s: FlightState, p: SlipParams) -> np.ndarray:
    """Ballistic CoM with the leg retracting at constant rate."""
    return np.array([s.xdot, 0.0, s.zdot, -p.g, p.omega])


def stance_derivative(s: StanceState, p: SlipParams) -> np.ndarray:
    """Polar spring-leg dynamics about the foot, with constant actuation.

    theta'' = -(2*thetadot*ldot + g*cos(theta))/l + u_hip/(m*l^2)
    l''     = -g*sin(theta) + thetadot^2*l + (k/m)*(l0 - l + u_axial)
    """
    if s.l <= 0.0:
        raise SingularConfiguration(f"leg length must be positive (got {s.l})")
    thetadd = -(2.0 * s.thetadot * s.ldot + p.g * math.cos(s.theta)) / s.l
    thetadd += p.u_hip / (p.m * s.l * s.l)
    ldd = -p.g * math.sin(s.theta) + s.thetadot * s.thetadot * s.l
    ldd += (p.k / p.m) * (p.l0 - s.l + p.u_axial)
    return np.array([s.thetadot, thetadd, s.ldot, ldd])


def cartesian_stance_derivative(
    x: float, z: float, xdot: float, zdot: float, p: SlipParams
) -> tuple[float, float]:
    """Stance accelerations in Cartesian CoM coordinates, foot at the origin.

    With ``w2 = k/m``:  xddot = x*w2*(l0/r - 1),  zddot = z*w2*(l0/r - 1) - g
    where ``r = sqrt(x^2 + z^2)``.  Equivalent to the polar form for the
    passive model (``u_hip = u_axial = 0``).
    """
    r = math.hypot(x, z)
    if r <= 0.0:
        raise SingularConfiguration("zero leg length in Cartesian stance")
    coef = (p.k / p.m) * (p.l0 / r - 1.0)
    return x * coef, z * coef - p.g


# --- guards and chart changes ------------------------------------------------


def touchdown_guard(s: FlightState, p: SlipParams) -> float:
    """Foot height above ground; fires descending (with the CoM descending)."""
    return s.z - p.l0 * math.sin(s.theta)


def liftoff_guard(s: StanceState, p: SlipParams) -> float:
    """Spring compression deficit; fires ascending as the leg re-extends."""
    return s.l - p.l0


def flight_to_stance(s: FlightState, p: SlipParams) -> tuple[StanceState, float]:
    """Pin the foot and project the CoM velocity into polar rates.

    Requires the flight state to lie on the touchdown surface.  Returns the
    stance state and the ground coordinate of the pinned foot.  The inverse
    map :func:`stance_to_flight` reproduces the Cartesian state exactly.
    """
    if abs(touchdown_guard(s, p)) > TRANSITION_TOL:
        raise InvalidTransition(
            f"touchdown guard {touchdown_guard(s, p):.3e} exceeds tolerance {TRANSITION_TOL:.0e}"
        )
    foot_x = s.x + p.l0 * math.cos(s.theta)
    c, si = math.cos(s.theta), math.sin(s.theta)
    ldot = -s.xdot * c + s.zdot * si
    thetadot = (s.xdot * si + s.zdot * c) / p.l0
    return StanceState(theta=s.theta, thetadot=thetadot, l=p.l0, ldot=ldot), foot_x


def stance_to_flight(s: StanceState, foot_x: float, p: SlipParams) -> FlightState:
    """Release the foot and reconstruct the Cartesian CoM state."""
    c, si = math.cos(s.theta), math.sin(s.theta)
    x = foot_x - s.l * c
    z = s.l * si
    xdot = -s.ldot * c + s.l * s.thetadot * si
    zdot = s.ldot * si + s.l * s.thetadot * c
    return FlightState(x=x, xdot=xdot, z=z, zdot=zdot, theta=s.theta)


def stance_com(s: StanceState, foot_x: float) -> tuple[float, float, float, float]:
    """Cartesian (x, z, xdot, zdot) of the CoM during stance."""
    c, si = math.cos(s.theta), math.sin(s.theta)
    return (
        foot_x - s.l * c,
        s.l * si,
        -s.ldot * c + s.l * s.thetadot * si,
        s.ldot * si + s.l * s.thetadot * c,
    )


# --- simulation --------------------------------------------------------------


class _TraceBuilder:
    def __init__(self):
        self.rows: list[tuple] = []
        self.events: list[TraceEvent] = []

    def add(self, t, phase, x, z, xdot, zdot, l, theta):
        # Event refinement can land exactly on the previous sample time.
        if self.rows and t <= self.rows[-1][0]:
            return
        self.rows.append((t, phase.value, x, z, xdot, zdot, l, theta))

    def add_event(self, t, kind):
        self.events.append(TraceEvent(t, kind))

    def build(self) -> HopTrace:
        if self.rows:
            cols = list(zip(*self.rows))
        else:
            cols = [[]] * 8
        return HopTrace(
            t=np.array(cols[0], dtype=float),
            phase=list(cols[1]),
            x=np.array(cols[2], dtype=float),
            z=np.array(cols[3], dtype=float),
            xdot=np.array(cols[4], dtype=float),
            zdot=np.array(cols[5], dtype=float),
            l=np.array(cols[6], dtype=float),
            theta=np.array(cols[7], dtype=float),
            events=self.events,
        )


def _flight_system(p: SlipParams) -> OdeSystem:
    def deriv(t, y):
        return np.array([y[1], 0.0, y[3], -p.g, p.omega])

    return OdeSystem(dimension=5, derivative=deriv)


def _stance_system(p: SlipParams) -> OdeSystem:
    def deriv(t, y):
        return stance_derivative(StanceState.from_array(y), p)

    return OdeSystem(dimension=4, derivative=deriv)


def flight_guards(p: SlipParams) -> dict[str, Guard]:
    """Touchdown, apex and fall guards over the flight state vector."""
    return {
        "touchdown": Guard(
            lambda t, y: y[2] - p.l0 * math.sin(y[4]), GuardDirection.DESCENDING
        ),
        "apex": Guard(lambda t, y: y[3], GuardDirection.DESCENDING),
        "fall": Guard(
            lambda t, y: y[2] - FALL_HEIGHT_FRACTION * p.l0, GuardDirection.DESCENDING
        ),
    }


def stance_guards(p: SlipParams) -> dict[str, Guard]:
    """Liftoff and fall guards over the stance state vector."""
    return {
        "liftoff": Guard(lambda t, y: y[2] - p.l0, GuardDirection.ASCENDING),
        "fall_len": Guard(
            lambda t, y: y[2] - FALL_LENGTH_FRACTION * p.l0, GuardDirection.DESCENDING
        ),
        "fall_height": Guard(
            lambda t, y: y[2] * math.sin(y[0]) - FALL_HEIGHT_FRACTION * p.l0,
            GuardDirection.DESCENDING,
        ),
    }


def simulate_slip(
    initial: FlightState,
    p: SlipParams,
    stop: StopCondition,
    *,
    step: float = DEFAULT_STEP,
) -> HopTrace:
    """Run the hybrid model until a stop condition or a fall.

    Alternates flight and stance through the guards, recording one sample
    per integration step plus samples and events at every transition and at
    each flight apex.  A run ends with the Nth liftoff when ``max_hops = N``
    (for ``N = 0``, at the first touchdown), at ``max_time``, or with a
    ``fall`` event when the CoM height drops below ``0.05*l0`` or the spring
    below ``0.1*l0``.
    """
    if touchdown_guard(initial, p) <= 0.0:
        raise ValueError(
            f"z must start above the touchdown surface l0*sin(theta) (got z={initial.z})"
        )
    tb = _TraceBuilder()
    flight_sys, stance_sys = _flight_system(p), _stance_system(p)
    fg, sg = flight_guards(p), stance_guards(p)

    t = 0.0
    phase = Phase.FLIGHT
    y = initial.as_array()
    foot_x = 0.0
    hops = 0
    stalled_cycles = 0
    tb.add(t, phase, y[0], y[2], y[1], y[3], p.l0, y[4])

    def record_flight(ts, ys):
        tb.add(ts, Phase.FLIGHT, ys[0], ys[2], ys[1], ys[3], p.l0, ys[4])

    def record_stance(ts, ys):
        x, z, xdot, zdot = stance_com(StanceState.from_array(ys), foot_x)
        tb.add(ts, Phase.STANCE, x, z, xdot, zdot, ys[2], ys[0])

    try:
        while t < stop.max_time:
            if phase is Phase.FLIGHT:
                names = ["touchdown", "fall"]
                if y[3] > 0.0:
                    names.append("apex")
                while True:
                    guards = [fg[n] for n in names]
                    idx, outcome = integrate_until_first_event(
                        flight_sys, guards, t, y, step, stop.max_time, observer=record_flight
                    )
                    if idx is not None and names[idx] == "apex":
                        t, y = outcome.time, outcome.state
                        record_flight(t, y)
                        tb.add_event(t, "apex")
                        names.remove("apex")
                        continue
                    break
                if idx is None:
                    t, y = outcome.time, outcome.state
                    record_flight(t, y)
                    break
                t, y = outcome.time, outcome.state
                name = names[idx]
                if name == "fall":
                    record_flight(t, y)
                    tb.add_event(t, "fall")
                    break
                # Touchdown requires a descending CoM; a foot strike while the
                # CoM still rises (fast retraction) has no modeled
                # continuation and terminates the run.
                if y[3] >= 0.0:
                    record_flight(t, y)
                    tb.add_event(t, "fall")
                    break
                record_flight(t, y)  # the sample closing the flight segment
                fs = FlightState.from_array(y)
                tb.add_event(t, "touchdown")
                if hops >= stop.max_hops:
                    break
                ss, foot_x = flight_to_stance(fs, p)
                phase = Phase.STANCE
                y = ss.as_array()
                stance_start = t
            else:
                names = ["liftoff", "fall_len", "fall_height"]
                guards = [sg[n] for n in names]
                idx, outcome = integrate_until_first_event(
                    stance_sys, guards, t, y, step, stop.max_time, observer=record_stance
                )
                if idx is None:
                    t, y = outcome.time, outcome.state
                    record_stance(t, y)
                    break
                t, y = outcome.time, outcome.state
                if names[idx] != "liftoff":
                    record_stance(t, y)
                    tb.add_event(t, "fall")
                    break
                hops += 1
                record_stance(t, y)  # the sample closing the stance segment
                fs = stance_to_flight(StanceState.from_array(y), foot_x, p)
                tb.add_event(t, "liftoff")
                phase = Phase.FLIGHT
                y = fs.as_array()
                # Contact chatter guard: zero-length stances cannot make
                # progress, so repeated ones terminate the run as a fall.
                if t - stance_start <= 0.0:
                    stalled_cycles += 1
                    if stalled_cycles >= 3:
                        tb.add_event(t, "fall")
                        break
                else:
                    stalled_cycles = 0
                if hops >= stop.max_hops:
                    break
    except (IntegrationDiverged, SingularConfiguration) as exc:
        # A singular configuration mid-step is a blowup symptom; either way
        # the caller gets the divergence with the partial trace attached.
        raise IntegrationDiverged(str(exc), trace=tb.build()) from None
    return tb.build()
