"""Exception types raised by the numerical pipeline."""


class SemiharmError(Exception):
    """Base class for all package errors."""


class SolverDivergence(SemiharmError):
    """Fiber root finder failed to converge (ill-conditioned coefficients)."""


class AmbiguousCluster(SemiharmError):
    """Root clusters could not be separated at the working perturbation."""


class BranchJump(SemiharmError):
    """Branch continuation met nearly coincident roots inside a stencil or path."""


class DegenerateRadius(SemiharmError):
    pass


class NotOnBoundary(SemiharmError):
    pass


class VanishingGradient(SemiharmError):
    pass


class RegionEscapesDomain(SemiharmError):
    """Requested (pseudo-)ball is not contained in the base ball."""


class LogSingularity(SemiharmError):
    pass


class InvalidCovering(SemiharmError):
    """Covering specification rejected (non-monic, degenerate discriminant, ...)."""


class ConfigError(SemiharmError):
    """Bad scenario / command line input. Maps to exit code 2."""
