"""Exception types raised by the toolkit.

Physical edge cases (no state (2), cavitation, non-convergence) are typed so
that callers such as the CLI can map them to exit codes instead of crashing.
"""


class ShockReflectionError(Exception):
    """Base class for all toolkit errors."""


class DomainError(ShockReflectionError, ValueError):
    """An argument lies outside the domain of a closed-form relation."""


class VacuumError(ShockReflectionError):
    """Bernoulli law gives non-positive density (cavitation)."""


class NoIncidentShock(ShockReflectionError, ValueError):
    """rho1 <= rho0: the incident shock does not exist."""


class DegenerateAngle(ShockReflectionError, ValueError):
    """Wedge angle at (or beyond) pi/2, where the reflection point is at infinity."""


class NoRoot(ShockReflectionError):
    """State (2) does not exist for this wedge angle (below detachment)."""


class MergedRoot(NoRoot):
    """Weak and strong state (2) coincide to within tolerance (at detachment)."""


class SingularNormal(ShockReflectionError):
    """D(phi1 - phi2) vanishes, so the reflected-shock normal is undefined."""


class NoCriticalDensity(ShockReflectionError):
    """u1 - c1 does not change sign on the searched density range."""


class BracketError(ShockReflectionError):
    """A bisection bracket could not be established; carries diagnostics."""


class NoIntersection(ShockReflectionError):
    """The sonic circle misses the reflected shock line or the wedge ray."""


class GuessInfeasible(ShockReflectionError):
    """No curve in the template family satisfies the initial-guess constraints."""


class InnerDiverged(ShockReflectionError):
    """The nonlinear inner solve stagnated above tolerance."""


class VacuumEncountered(VacuumError):
    """Cavitation detected inside a field solve."""


class SensitivityDegenerate(ShockReflectionError):
    """The shock-flux sensitivity vanished on every free node."""


class NotConverged(ShockReflectionError):
    """Outer free-boundary iteration hit its cap; carries the last iterate."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
