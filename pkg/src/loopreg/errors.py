"""Exception hierarchy.  Each class maps to one CLI exit code."""


class LoopRegError(Exception):
    """Base class for all package errors."""


class ConfigurationError(LoopRegError, ValueError):
    """Invalid grid size, tolerance or file content."""


class CollisionError(LoopRegError, ValueError):
    """A loop comes closer to the origin than the collision guard allows."""


class NotADiffeomorphismError(LoopRegError, ValueError):
    """A lift is not strictly increasing (slope at or below the floor)."""


class ResolutionError(LoopRegError, ValueError):
    """The grid is too coarse to track the argument of a loop."""


class ConvergenceError(LoopRegError, RuntimeError):
    """The root finder of the inversion did not converge."""
