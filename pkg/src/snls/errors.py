"""Exception types shared across the package."""


class SnlsError(Exception):
    """Base class for all errors raised by snls."""


class NotAdmissible(SnlsError):
    """Requested Strichartz pair violates the scaling/admissibility rules."""


class OutOfRange(SnlsError):
    """Model parameter outside its supported range."""


class CriticalDelta(SnlsError):
    """Window-length formula undefined because the time-gain exponent is 0."""


class GridMismatch(SnlsError):
    """Fields defined on different grids were combined."""


class MeshMismatch(SnlsError):
    """Time meshes of two objects that must share a mesh differ."""


class LengthMismatch(SnlsError):
    """Array argument has the wrong length."""


class EmptyTrajectory(SnlsError):
    """Operation requires a trajectory with at least one recorded state."""


class UnboundedCoefficient(SnlsError):
    """Noise coefficient contains NaN/Inf values."""


class NotConservative(SnlsError):
    """Operation requires real-valued noise coefficients."""


class ConfigError(SnlsError):
    """Simulation configuration failed validation."""


class SolverError(SnlsError):
    """Base class for time-integrator failures."""


class NoContraction(SolverError):
    """Picard window refinement bottomed out without a contracting map.

    Carries diagnostics: the window start time, the smallest window tried
    and the observed iterate ratios.
    """

    def __init__(self, message, window_start=None, window_steps=None, ratios=None):
        super().__init__(message)
        self.window_start = window_start
        self.window_steps = window_steps
        self.ratios = list(ratios) if ratios is not None else []


class MaxItersExceeded(SolverError):
    """Picard iteration hit the iteration cap on a minimal window."""

    def __init__(self, message, window_start=None, iterations=None):
        super().__init__(message)
        self.window_start = window_start
        self.iterations = iterations
