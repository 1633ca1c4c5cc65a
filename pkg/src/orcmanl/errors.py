"""Exception types raised across the package."""


class OrcManlError(Exception):
    """Base class for all package errors."""


class UnsupportedManifold(OrcManlError, ValueError):
    """Raised when a manifold family name is not known to the sampler."""


class LabelingFailure(OrcManlError, RuntimeError):
    """Raised when the dense reference sample cannot support geodesic labeling."""


class InvalidConfig(OrcManlError, ValueError):
    """Raised for out-of-range pruning or sweep parameters."""


class InvalidLabels(OrcManlError, ValueError):
    """Raised when labels do not line up with the edges or points they score."""
