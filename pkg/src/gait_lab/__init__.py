"""Planar template models of legged locomotion.

Three hybrid models built on one fixed-step integrator with event
detection: a spring-mass runner, a pendulum walker driven by a gait state
machine, and a quadruped crawler driven by its front legs.  Analysis tools
cover kinematic curves, energy audits and apex return maps; the ``gait-lab``
command exports CSV traces and figures.
"""

from .analysis import (
    ApexState,
    KinematicCurves,
    apex_map,
    energy_series,
    extract_curves,
    find_periodic_gait,
    total_energy,
)
from .crawler import (
    ContactForces,
    CrawlState,
    CrawlTrace,
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
from .errors import (
    FallDuringCycle,
    FixedPointNoConvergence,
    GaitLabError,
    InfeasibleGeometry,
    IntegrationDiverged,
    InvalidTransition,
    SingularConfiguration,
    SingularKick,
    TippingInfeasible,
    UnreachableTouchdown,
)
from .integrator import (
    EventKind,
    EventOutcome,
    Guard,
    GuardDirection,
    OdeSystem,
    integrate_step,
    integrate_until_event,
    integrate_until_first_event,
)
from .slip import (
    FlightState,
    HopTrace,
    Phase,
    SlipParams,
    StanceState,
    StopCondition,
    cartesian_stance_derivative,
    flight_derivative,
    flight_to_stance,
    liftoff_guard,
    simulate_slip,
    stance_derivative,
    stance_to_flight,
    touchdown_guard,
)
from .walker import (
    GaitTargets,
    JointTargets,
    LegMachine,
    LegPhase,
    PendulumState,
    Side,
    WalkerParams,
    WalkerState,
    WalkerTrace,
    advance_gait,
    cadence_speed,
    gait_targets,
    initial_walker_state,
    kick_force,
    lip_accel,
    lip_closed_form,
    orbital_energy,
    pendulum_derivative,
    simulate_walker,
)

__version__ = "0.1.0"
