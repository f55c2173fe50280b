"""Quadruped crawling model: two pendulum pairs joined by a rigid trunk.

The trunk carries a fore mass and a hind mass; their common CoM divides the
trunk in inverse mass ratio.  Motion is quasi-static and planar: at every
instant the vertical load is shared between one fore contact and the hind
support by lever arms about the CoM, and the horizontal acceleration follows
from the force balance

    xddot = (f_fore*sin(q11) - f_hind*cos(q24)) / (m_F + m_H)
    f_fore*cos(q11) + f_hind*sin(q24) = (m_F + m_H)*g

where the fore angle ``q11`` is measured from the vertical and the hind
angle ``q24`` from the horizontal (the two conventions are each other's
mirror: swapping fore and hind maps ``q -> pi/2 - q``).

Gait: only the front legs drive.  One front leg is planted and pulls (its
foot ahead of the fore hip), the other swings sinusoidally; every half
period the swinging leg plants ahead at the drive amplitude and the sides
alternate.  The hind legs are passive supports held ahead of the hind hip
at a fixed tilt: their contact drags forward with the body but never
slides backward (a forward ratchet).  Advancing therefore sees a constant
hind drag balanced against the fore pull, which fades as the planted arm
depletes - a stable creep.  Falling behind the haunches instead grows the
drag without bound, so a back-heavy body (CoM near the hind contact) is
pushed backward ever harder until the CoM leaves the support span and the
model tips - the run then ends with a fall event.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleGeometry, TippingInfeasible

DEFAULT_STEP = 1e-3
# Hind contacts plant ahead of the hind hip at this tilt from vertical.
REAR_PLANT_TILT = 0.25
PHASE_EPS = 1e-9
PROJECTION_TOL = 1e-9


class DriveSide(enum.Enum):
    FRONT_LEFT_SWING = "front-left-swing"
    FRONT_RIGHT_SWING = "front-right-swing"

    @property
    def other(self) -> "DriveSide":
        if self is DriveSide.FRONT_LEFT_SWING:
            return DriveSide.FRONT_RIGHT_SWING
        return DriveSide.FRONT_LEFT_SWING


@dataclass(frozen=True)
class QuadParams:
    """Masses, geometry and gait constants.

    ``m_F > m_H`` (front-heavy) is the design regime in which the crawl is
    viable; back-heavy parameter sets are constructible but tip over within
    a couple of cycles.
    """

    m_F: float = 4.0
    m_H: float = 2.5
    trunk_len: float = 0.4
    leg_len: float = 0.25
    g: float = 9.81
    crawl_period: float = 1.5
    drive_angle_amp: float = 0.35

    def __post_init__(self):
        for name in ("m_F", "m_H", "trunk_len", "leg_len", "g", "crawl_period"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive (got {getattr(self, name)})")
        if not 0.0 < self.drive_angle_amp < math.pi / 2:
            raise ValueError(
                f"drive_angle_amp must lie in (0, pi/2) (got {self.drive_angle_amp})"
            )

    @property
    def total_mass(self) -> float:
        return self.m_F + self.m_H

    @property
    def fore_hip_offset(self) -> float:
        """Distance from the CoM forward to the fore hip."""
        return self.trunk_len * self.m_H / self.total_mass

    @property
    def hind_hip_offset(self) -> float:
        """Distance from the CoM back to the hind hip."""
        return self.trunk_len * self.m_F / self.total_mass


@dataclass(frozen=True)
class SwingAngles:
    """Per-leg angles; group sums are derived, never stored.

    ``q11`` carries the load-bearing fore angle (from vertical) and ``q24``
    the load-bearing hind angle (from horizontal) - the pair the force
    balance reads.  ``q12`` (the swinging fore leg) and ``q23`` (the
    mirrored hind leg) are carried kinematically and bear no load.
    """

    q11: float
    q12: float
    q23: float
    q24: float

    @property
    def q1(self) -> float:
        return self.q11 + self.q12

    @property
    def q2(self) -> float:
        return self.q23 + self.q24


def group_angles(a: SwingAngles) -> tuple[float, float]:
    """Group swing angles: the fore and hind leg-pair sums."""
    return a.q1, a.q2


@dataclass(frozen=True)
class ContactForces:
    """Magnitudes of the two load-bearing leg forces (unilateral contact)."""

    f_FR: float
    f_HL: float

    def __post_init__(self):
        if self.f_FR < 0.0 or self.f_HL < 0.0:
            raise ValueError(
                f"contact forces must be non-negative (got {self.f_FR}, {self.f_HL})"
            )


def force_balance(
    f: ContactForces, a: SwingAngles, p: QuadParams
) -> tuple[float, float]:
    """Horizontal acceleration and vertical force residual of the trunk.

    The residual is zero exactly when the vertical components of the two
    leg forces carry the weight.
    """
    m = p.total_mass
    xddot = (f.f_FR * math.sin(a.q11) - f.f_HL * math.cos(a.q24)) / m
    z_residual = f.f_FR * math.cos(a.q11) + f.f_HL * math.sin(a.q24) - m * p.g
    return xddot, z_residual


def load_split(
    a: SwingAngles,
    stance_fore_x: float,
    stance_hind_x: float,
    com_x: float,
    p: QuadParams,
) -> ContactForces:
    """Distribute the weight between the two contacts by lever arms.

    The vertical load splits in proportion to the opposite CoM distances
    (fore share ``(com - hind)/(fore - hind)``); each magnitude is then
    scaled so the vertical balance holds exactly.  Raises
    ``TippingInfeasible`` when the CoM lies outside the support span and
    ``InfeasibleGeometry`` when a required vertical projection vanishes
    (no finite non-negative forces exist).
    """
    if not stance_fore_x > com_x > stance_hind_x:
        raise TippingInfeasible(
            f"CoM {com_x:.4f} outside support span "
            f"[{stance_hind_x:.4f}, {stance_fore_x:.4f}]"
        )
    share_fore = (com_x - stance_hind_x) / (stance_fore_x - stance_hind_x)
    weight = p.total_mass * p.g
    proj_fore = math.cos(a.q11)
    proj_hind = math.sin(a.q24)
    if share_fore > 0.0 and proj_fore <= PROJECTION_TOL:
        raise InfeasibleGeometry(
            f"fore vertical projection cos(q11)={proj_fore:.3e} cannot carry load"
        )
    if share_fore < 1.0 and proj_hind <= PROJECTION_TOL:
        raise InfeasibleGeometry(
            f"hind vertical projection sin(q24)={proj_hind:.3e} cannot carry load"
        )
    return ContactForces(
        f_FR=share_fore * weight / proj_fore,
        f_HL=(1.0 - share_fore) * weight / proj_hind,
    )


@dataclass(frozen=True)
class CrawlState:
    """Value state of the crawler.

    ``stance_foot_x``/``hind_foot_x`` are the planted contact positions;
    ``t_phase`` the time into the current half period.  Exactly one front
    leg swings at a time (named by ``drive``); the hind legs never swing.
    """

    com_x: float
    com_xdot: float
    angles: SwingAngles
    drive: DriveSide
    t_phase: float
    stance_foot_x: float
    hind_foot_x: float


def _swing_angle(t_phase: float, p: QuadParams) -> float:
    """Drive law: sinusoid at the crawl period, spanning -amp to +amp."""
    return -p.drive_angle_amp * math.cos(2.0 * math.pi * t_phase / p.crawl_period)


def _angles_of(
    com_x: float, t_phase: float, stance_foot_x: float, hind_foot_x: float, p: QuadParams
) -> SwingAngles:
    arg_fore = (stance_foot_x - (com_x + p.fore_hip_offset)) / p.leg_len
    if abs(arg_fore) >= 1.0 - 1e-12:
        raise InfeasibleGeometry(f"fore stance leg over-extended (offset ratio {arg_fore:.3f})")
    arg_hind = (hind_foot_x - (com_x - p.hind_hip_offset)) / p.leg_len
    if abs(arg_hind) >= 1.0 - 1e-12:
        raise InfeasibleGeometry(f"hind support leg over-extended (offset ratio {arg_hind:.3f})")
    hind_from_horizontal = 0.5 * math.pi - math.asin(arg_hind)
    return SwingAngles(
        q11=math.asin(arg_fore),
        q12=_swing_angle(t_phase, p),
        q23=-hind_from_horizontal,
        q24=hind_from_horizontal,
    )


def initial_crawl_state(
    p: QuadParams, com_x: float = 0.0, com_xdot: float = 0.0
) -> CrawlState:
    """Fresh start: right front leg lifting, left planted at full splay."""
    stance_foot = com_x + p.fore_hip_offset + p.leg_len * math.sin(p.drive_angle_amp)
    hind_foot = com_x - p.hind_hip_offset + p.leg_len * math.sin(REAR_PLANT_TILT)
    return CrawlState(
        com_x=com_x,
        com_xdot=com_xdot,
        angles=_angles_of(com_x, 0.0, stance_foot, hind_foot, p),
        drive=DriveSide.FRONT_RIGHT_SWING,
        t_phase=0.0,
        stance_foot_x=stance_foot,
        hind_foot_x=hind_foot,
    )


def crawl_closure(
    s: CrawlState, p: QuadParams
) -> tuple[SwingAngles, ContactForces, float]:
    """Angles, contact forces and CoM acceleration at the current state."""
    angles = _angles_of(s.com_x, s.t_phase, s.stance_foot_x, s.hind_foot_x, p)
    forces = load_split(angles, s.stance_foot_x, s.hind_foot_x, s.com_x, p)
    xddot, _ = force_balance(forces, angles, p)
    return angles, forces, xddot


def advance_crawl(s: CrawlState, dt: float, p: QuadParams) -> CrawlState:
    """One quasi-static tick: force closure, CoM update, gait bookkeeping.

    The CoM integrates semi-implicitly.  The hind contact ratchets: it
    drags forward so its tilt never drops below the plant tilt, but it
    never slides backward.  When the half period completes, the swinging
    leg plants ahead at the drive amplitude and the driving side
    alternates.  ``TippingInfeasible``/``InfeasibleGeometry`` propagate;
    simulations convert them into a fall event.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive (got {dt})")
    _, _, xddot = crawl_closure(s, p)
    v = s.com_xdot + xddot * dt
    x = s.com_x + v * dt
    t_phase = s.t_phase + dt
    drive, stance_foot = s.drive, s.stance_foot_x
    hind_foot = max(
        s.hind_foot_x,
        x - p.hind_hip_offset + p.leg_len * math.sin(REAR_PLANT_TILT),
    )
    if t_phase >= 0.5 * p.crawl_period - PHASE_EPS:
        t_phase -= 0.5 * p.crawl_period
        drive = drive.other
        stance_foot = x + p.fore_hip_offset + p.leg_len * math.sin(p.drive_angle_amp)
    return CrawlState(
        com_x=x,
        com_xdot=v,
        angles=_angles_of(x, t_phase, stance_foot, hind_foot, p),
        drive=drive,
        t_phase=t_phase,
        stance_foot_x=stance_foot,
        hind_foot_x=hind_foot,
    )


@dataclass(frozen=True)
class CrawlEvent:
    t: float
    kind: str  # swap | fall


@dataclass
class CrawlTrace:
    t: np.ndarray
    drive: list[str]
    com_x: np.ndarray
    com_xdot: np.ndarray
    q11: np.ndarray
    q12: np.ndarray
    q23: np.ndarray
    q24: np.ndarray
    f_FR: np.ndarray
    f_HL: np.ndarray
    xddot: np.ndarray
    events: list[CrawlEvent]

    def __len__(self) -> int:
        return len(self.t)

    def event_times(self, kind: str) -> list[float]:
        return [e.t for e in self.events if e.kind == kind]


def simulate_crawler(
    p: QuadParams,
    duration: float,
    *,
    step: float = DEFAULT_STEP,
    initial_com_x: float = 0.0,
    initial_com_xdot: float = 0.0,
) -> CrawlTrace:
    """Run the crawl at a fixed tick, recording the full force closure.

    Each sample row carries the CoM state, all four leg angles, the two
    contact-force magnitudes, and the recorded acceleration, so the force
    balance can be re-audited from the trace alone.  A support failure
    (tipping or an over-extended leg) terminates the run with a ``fall``
    event; the trace up to that point is returned.
    """
    if duration <= 0.0:
        raise ValueError(f"duration must be positive (got {duration})")
    n_ticks = max(1, round(duration / step))
    s = initial_crawl_state(p, com_x=initial_com_x, com_xdot=initial_com_xdot)
    rows: list[tuple] = []
    events: list[CrawlEvent] = []

    t = 0.0
    for i in range(n_ticks + 1):
        t = i * step
        try:
            angles, forces, xddot = crawl_closure(s, p)
        except (TippingInfeasible, InfeasibleGeometry):
            events.append(CrawlEvent(t, "fall"))
            break
        rows.append(
            (
                t,
                s.drive.value,
                s.com_x,
                s.com_xdot,
                angles.q11,
                angles.q12,
                angles.q23,
                angles.q24,
                forces.f_FR,
                forces.f_HL,
                xddot,
            )
        )
        if i == n_ticks:
            break
        try:
            s_next = advance_crawl(s, step, p)
        except (TippingInfeasible, InfeasibleGeometry):
            events.append(CrawlEvent(t, "fall"))
            break
        if s_next.drive is not s.drive:
            events.append(CrawlEvent((i + 1) * step, "swap"))
        s = s_next

    cols = list(zip(*rows)) if rows else [[]] * 11
    return CrawlTrace(
        t=np.array(cols[0], dtype=float),
        drive=list(cols[1]),
        com_x=np.array(cols[2], dtype=float),
        com_xdot=np.array(cols[3], dtype=float),
        q11=np.array(cols[4], dtype=float),
        q12=np.array(cols[5], dtype=float),
        q23=np.array(cols[6], dtype=float),
        q24=np.array(cols[7], dtype=float),
        f_FR=np.array(cols[8], dtype=float),
        f_HL=np.array(cols[9], dtype=float),
        xddot=np.array(cols[10], dtype=float),
        events=events,
    )
