"""Exception and warning types shared across the package."""


class ConstraintError(ValueError):
    """A parameter violates a physical or pairing constraint (e.g. ``k > m``)."""


class ConsistencyError(RuntimeError):
    """An internal numerical invariant failed (should never happen for valid input)."""


class StepSizeError(RuntimeError):
    """The integrator step is too large for the unwrapped-angle bookkeeping.

    ``suggested_dt`` carries a step that would satisfy the guard.
    """

    def __init__(self, message, suggested_dt=None):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class AliasingWarning(RuntimeWarning):
    """Requested modes exceed what the grid resolves without aliasing."""


class ResolutionWarning(RuntimeWarning):
    """Time step too coarse for the fastest kinetic phase."""
