"""Fixed-step 4th-order integration with directed zero-crossing detection.

Every model in this package advances its continuous dynamics through this
module: a classical explicit Runge-Kutta step of order 4, plus a guard
mechanism that finds the instant a signed scalar crosses zero in a stated
direction and refines that instant by bisecting the bracketing step.

Conventions:
  * A guard "fires" when its value crosses zero in the required direction.
    A value of exactly zero at a step boundary counts as a crossing when
    the direction matches (ties break toward firing).
  * If the guard is already within ``event_tol`` of zero at the start time
    and is moving in the firing direction, the event fires immediately at
    the start time.  This is documented behaviour, not an error.
  * All functions are pure: inputs are never mutated, identical inputs
    produce bit-identical outputs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import IntegrationDiverged

DEFAULT_EVENT_TOL = 1e-10
DEFAULT_MAX_BISECTIONS = 100


class GuardDirection(enum.Enum):
    """Which way a guard must pass through zero to count as an event."""

    DESCENDING = "descending"
    ASCENDING = "ascending"
    ANY = "any"


class EventKind(enum.Enum):
    EVENT_FIRED = "event-fired"
    TIME_LIMIT = "time-limit"
    STEP_LIMIT = "step-limit"


@dataclass(frozen=True)
class OdeSystem:
    """A first-order ODE ``y' = f(t, y)`` of fixed dimension.

    ``derivative`` must be deterministic and return a vector of length
    ``dimension`` for a state of the same length.
    """

    dimension: int
    derivative: Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Guard:
    """Signed scalar whose directed zero crossing marks a phase transition."""

    evaluate: Callable[[float, np.ndarray], float]
    direction: GuardDirection = GuardDirection.ANY


@dataclass(frozen=True)
class EventOutcome:
    """Result of integrating toward a guard crossing.

    ``guard_value`` is the guard evaluated at ``(time, state)``.  For
    ``EVENT_FIRED`` it is within the event tolerance; ``STEP_LIMIT`` marks a
    crossing whose bisection budget ran out before reaching tolerance.
    """

    kind: EventKind
    time: float
    state: np.ndarray
    guard_value: float


def integrate_step(system: OdeSystem, t: float, state: np.ndarray, h: float) -> np.ndarray:
    """Advance ``state`` by one classical 4th-order step of size ``h``."""
    if h <= 0.0:
        raise ValueError(f"step size h must be positive (got {h})")
    y = np.asarray(state, dtype=float)
    if y.shape != (system.dimension,):
        raise ValueError(
            f"state length {y.shape} does not match system dimension {system.dimension}"
        )
    f = system.derivative
    k1 = np.asarray(f(t, y), dtype=float)
    k2 = np.asarray(f(t + 0.5 * h, y + (0.5 * h) * k1), dtype=float)
    k3 = np.asarray(f(t + 0.5 * h, y + (0.5 * h) * k2), dtype=float)
    k4 = np.asarray(f(t + h, y + h * k3), dtype=float)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise IntegrationDiverged(f"non-finite derivative at t={t}")
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _crossed(direction: GuardDirection, g_prev: float, g_new: float) -> bool:
    # Exact zero at a boundary counts as crossed when the direction matches.
    if direction is GuardDirection.DESCENDING:
        return (g_prev > 0.0 and g_new <= 0.0) or (g_prev == 0.0 and g_new < 0.0)
    if direction is GuardDirection.ASCENDING:
        return (g_prev < 0.0 and g_new >= 0.0) or (g_prev == 0.0 and g_new > 0.0)
    return (
        (g_prev > 0.0 and g_new <= 0.0)
        or (g_prev < 0.0 and g_new >= 0.0)
        or (g_prev == 0.0 and g_new != 0.0)
    )


def _moving_toward_firing(direction: GuardDirection, g_now: float, g_probe: float) -> bool:
    if direction is GuardDirection.DESCENDING:
        return g_probe < g_now
    if direction is GuardDirection.ASCENDING:
        return g_probe > g_now
    return g_probe != g_now


def _refine_crossing(
    system: OdeSystem,
    guard: Guard,
    t_anchor: float,
    y_anchor: np.ndarray,
    t_lo: float,
    g_lo: float,
    t_hi: float,
    y_hi: np.ndarray,
    g_hi: float,
    event_tol: float,
    max_bisections: int,
) -> EventOutcome:
    """Bisect the bracketing step down to ``|guard| < event_tol``.

    Candidate states are always produced by a single step from the anchor
    (the start of the bracketing step), so the refined state lies on the
    same numerical trajectory regardless of how the bracket shrinks.
    """
    if abs(g_lo) < event_tol:
        y_lo = y_anchor if t_lo == t_anchor else integrate_step(system, t_anchor, y_anchor, t_lo - t_anchor)
        return EventOutcome(EventKind.EVENT_FIRED, t_lo, y_lo, g_lo)
    if abs(g_hi) < event_tol:
        return EventOutcome(EventKind.EVENT_FIRED, t_hi, y_hi, g_hi)

    t_mid, y_mid, g_mid = t_hi, y_hi, g_hi
    for _ in range(max_bisections):
        t_mid = 0.5 * (t_lo + t_hi)
        if t_mid <= t_lo or t_mid >= t_hi:
            break  # bracket narrower than float spacing
        y_mid = integrate_step(system, t_anchor, y_anchor, t_mid - t_anchor)
        g_mid = float(guard.evaluate(t_mid, y_mid))
        if abs(g_mid) < event_tol:
            return EventOutcome(EventKind.EVENT_FIRED, t_mid, y_mid, g_mid)
        if _crossed(guard.direction, g_lo, g_mid):
            t_hi, g_hi = t_mid, g_mid
        else:
            t_lo, g_lo = t_mid, g_mid
    return EventOutcome(EventKind.STEP_LIMIT, t_mid, y_mid, g_mid)


def integrate_until_first_event(
    system: OdeSystem,
    guards: Sequence[Guard],
    t0: float,
    state0: np.ndarray,
    h: float,
    t_max: float,
    *,
    event_tol: float = DEFAULT_EVENT_TOL,
    max_bisections: int = DEFAULT_MAX_BISECTIONS,
    observer: Optional[Callable[[float, np.ndarray], None]] = None,
) -> tuple[Optional[int], EventOutcome]:
    """Step until any guard fires, returning ``(guard_index, outcome)``.

    ``guard_index`` is ``None`` when the time limit was reached without a
    crossing.  ``observer`` is invoked after every accepted full step (not
    for the refined event state, which is returned in the outcome).  The
    final step is shortened so a time-limit outcome lands exactly on
    ``t_max``.
    """
    if t_max <= t0:
        raise ValueError(f"t_max ({t_max}) must exceed t0 ({t0})")
    if h <= 0.0:
        raise ValueError(f"step size h must be positive (got {h})")

    t = t0
    y = np.asarray(state0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise IntegrationDiverged(f"non-finite state at t={t}")
    g_now = [float(g.evaluate(t, y)) for g in guards]

    first = True
    while t < t_max:
        h_step = min(h, t_max - t)
        t_next = t + h_step
        y_next = integrate_step(system, t, y, h_step)
        if not np.all(np.isfinite(y_next)):
            raise IntegrationDiverged(f"non-finite state at t={t_next}")
        g_next = [float(g.evaluate(t_next, y_next)) for g in guards]

        if first:
            # A guard that starts at zero and moves toward firing fires at t0.
            for i, g in enumerate(guards):
                if abs(g_now[i]) < event_tol and _moving_toward_firing(
                    g.direction, g_now[i], g_next[i]
                ):
                    return i, EventOutcome(EventKind.EVENT_FIRED, t, y.copy(), g_now[i])
            first = False

        fired = [i for i, g in enumerate(guards) if _crossed(g.direction, g_now[i], g_next[i])]
        if fired:
            # Refine each candidate; the earliest crossing wins.
            best: tuple[float, int, EventOutcome] | None = None
            for i in fired:
                outcome = _refine_crossing(
                    system,
                    guards[i],
                    t,
                    y,
                    t,
                    g_now[i],
                    t_next,
                    y_next,
                    g_next[i],
                    event_tol,
                    max_bisections,
                )
                if best is None or outcome.time < best[0]:
                    best = (outcome.time, i, outcome)
            assert best is not None
            return best[1], best[2]

        if observer is not None:
            observer(t_next, y_next)
        t, y, g_now = t_next, y_next, g_next

    guard_value = g_now[0] if guards else float("nan")
    return None, EventOutcome(EventKind.TIME_LIMIT, t, y, guard_value)


def integrate_until_event(
    system: OdeSystem,
    guard: Guard,
    t0: float,
    state0: np.ndarray,
    h: float,
    t_max: float,
    *,
    event_tol: float = DEFAULT_EVENT_TOL,
    max_bisections: int = DEFAULT_MAX_BISECTIONS,
    observer: Optional[Callable[[float, np.ndarray], None]] = None,
) -> EventOutcome:
    """Single-guard form of :func:`integrate_until_first_event`."""
    _, outcome = integrate_until_first_event(
        system,
        [guard],
        t0,
        state0,
        h,
        t_max,
        event_tol=event_tol,
        max_bisections=max_bisections,
        observer=observer,
    )
    return outcome
