"""Exception types raised by the simulation and measurement layers."""


class HybridPFError(Exception):
    """Base class for all package errors."""


class EmptyLevelSet(HybridPFError):
    """The requested level set has no crossing on the grid."""


class SolverDiverged(HybridPFError):
    """Iterative elasticity solve hit its iteration cap."""

    def __init__(self, message, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)


class SingularSystem(HybridPFError):
    """Elasticity system lacks the boundary data needed to be invertible."""


class UnstableStep(HybridPFError):
    """Explicit step blew up (time step above the stability bound)."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class InterfaceExitedDomain(HybridPFError):
    """Sharp interface left the bar during oracle integration."""


class CircleVanished(HybridPFError):
    """Shrinking circle reached zero radius."""


class DegenerateGradient(HybridPFError):
    """|grad S| too small at a level-set sample to measure a speed."""


class NoOracle(HybridPFError):
    """No sharp-interface reference exists for the requested geometry."""


class DegenerateFit(HybridPFError):
    """Too few or non-positive points for a log-log fit."""


class TargetUnreachable(HybridPFError):
    """No swept parameter meets the requested error target."""


class ConfigError(HybridPFError):
    """Invalid or incomplete experiment configuration."""

    def __init__(self, message, path=None, key=None):
        where = f"{path}: " if path else ""
        super().__init__(f"{where}{message}")
        self.path = path
        self.key = key
