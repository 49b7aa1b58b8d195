"""Custom exceptions for torusaction."""


class TorusActionError(Exception):
    """Base exception for torusaction errors."""
    pass


class GeometryError(TorusActionError):
    """Raised when a plane/torus geometry computation is ill-posed."""
    pass


class ClearanceViolation(GeometryError):
    """Raised when a point lies within the clearance of a path."""
    pass


class RefinementExhausted(GeometryError):
    """Raised when adaptive refinement reaches its depth cap."""
    pass


class DegenerateIncidence(GeometryError):
    """Raised when an endpoint touches the other path or segments overlap."""
    pass


class IntegralityError(GeometryError):
    """Raised when an integer-valued quantity is not close to an integer."""
    pass


class IsotopyError(TorusActionError):
    """Raised when isotopy construction or evaluation fails."""
    pass


class InversionDiverged(IsotopyError):
    """Raised when Newton inversion of a time-one map does not converge."""
    pass


class NotFixed(IsotopyError):
    """Raised when a point required to be fixed is not fixed."""
    pass


class DegenerateDenominator(IsotopyError):
    """Raised when two fixed points collide during normalization."""
    pass


class LinkingError(TorusActionError):
    """Raised when linking number computations fail."""
    pass


class NotContractibleFixed(LinkingError):
    """Raised when a point is not a contractible fixed point."""
    pass


class ShellCapExceeded(LinkingError):
    """Raised when a deck sum does not vanish before the shell cap."""
    pass


class OrbitError(TorusActionError):
    """Raised when orbit computations fail."""
    pass


class CapExceeded(OrbitError):
    """Raised when a point does not return within the iteration cap."""
    pass


class TruncationUnverified(OrbitError):
    """Raised when the verification shell changes a truncated deck sum."""
    pass


class NotConverged(OrbitError):
    """Raised when an ergodic estimate does not stabilize."""
    pass


class DiskError(OrbitError):
    """Raised when a return disk is inadmissible."""
    pass


class ActionError(TorusActionError):
    """Raised when action computations fail."""
    pass


class MeasureError(ActionError):
    """Raised when a measure is invalid or not invariant."""
    pass


class QuadratureError(ActionError):
    """Raised when grid quadrature fails."""
    pass


class CocycleResidualExceeded(ActionError):
    """Raised when pairwise action differences are not a coboundary."""
    pass


class DeckInconsistent(ActionError):
    """Raised when L_mu is requested but deck translates disagree."""
    pass


class ScenarioError(TorusActionError):
    """Raised when a scenario file is invalid."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class StorageError(TorusActionError):
    """Raised when report storage operations fail."""
    pass


class ConfigurationError(TorusActionError):
    """Raised when configuration is invalid."""
    pass


ConfigError = ConfigurationError
