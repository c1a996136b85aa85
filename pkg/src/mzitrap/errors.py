"""Exception hierarchy.

Every error raised deliberately by the package derives from `MziTrapError`
so callers can catch the whole family at once.
"""


class MziTrapError(Exception):
    """Base class for all package errors."""


# -- dipole trap / special functions ---------------------------------------

class OutOfDomain(MziTrapError, ValueError):
    """Argument outside the real domain of a special function."""


class ResonanceSingularity(MziTrapError, ValueError):
    """Laser frequency coincides with an atomic resonance."""


class NoMinimum(MziTrapError, ValueError):
    """Gravity is too strong for the optical potential to hold a minimum."""


class Unbound(MziTrapError, ValueError):
    """Motion at the requested energy has no second turning point."""


# -- interferometer ----------------------------------------------------------

class NoSignChange(MziTrapError, ValueError):
    """Two signals do not cross inside the requested bracket."""


class Degenerate(MziTrapError, ValueError):
    """Two signals are identical, so a crossing is meaningless."""


# -- wave simulation ---------------------------------------------------------

class NoConvergence(MziTrapError, RuntimeError):
    """An iterative solver exhausted its step budget."""


class GridViolation(MziTrapError, RuntimeError):
    """The wavefunction reached the edge region of the simulation grid."""


# -- extraction --------------------------------------------------------------

class DegenerateSegment(MziTrapError, ValueError):
    """A resonance segment carries no signal energy."""


class Underdetermined(MziTrapError, ValueError):
    """Too few data points for the requested estimate."""


class IllConditioned(MziTrapError, ValueError):
    """Least-squares design matrix is numerically singular."""

    def __init__(self, message: str, condition_number: float):
        super().__init__(f"{message} (condition number {condition_number:.3e})")
        self.condition_number = condition_number


class PositiveCurvature(MziTrapError, ValueError):
    """Fitted quadratic coefficient is non-negative, so no bounds follow."""


# -- scenarios ---------------------------------------------------------------

class ScenarioError(MziTrapError, ValueError):
    """Malformed or invalid scenario file."""
