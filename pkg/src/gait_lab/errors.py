"""Exception types shared across the simulation modules."""


class GaitLabError(Exception):
    """Base class for all gait-lab specific failures."""


class IntegrationDiverged(GaitLabError):
    """A derivative or state stopped being finite during integration.

    When raised from a trace-producing simulation, the partial trace built
    so far is attached as ``trace`` (or ``None`` if nothing was recorded).
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class SingularConfiguration(GaitLabError):
    """The mechanism passed through a geometrically singular state (e.g. zero leg length)."""


class InvalidTransition(GaitLabError):
    """A chart change was requested away from its contact surface."""


class SingularKick(GaitLabError):
    """Kick force requested for a horizontal leg, where the along-leg force blows up."""


class TippingInfeasible(GaitLabError):
    """The body's weight line left the support span; no contact force balance exists."""


class InfeasibleGeometry(GaitLabError):
    """Contact angles admit no non-negative force solution (or a leg is over-extended)."""


class FallDuringCycle(GaitLabError):
    """A return-map cycle hit a fall condition before closing."""


class UnreachableTouchdown(GaitLabError):
    """The requested apex is already below the touchdown surface."""


class FixedPointNoConvergence(GaitLabError):
    """The periodic-gait search exhausted its iteration budget."""
