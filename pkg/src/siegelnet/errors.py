"""Exception hierarchy shared across the package.

Numerical preconditions are enforced loudly: invalid geometry raises instead
of being silently clamped, so that errors surface where they originate.
"""


class SiegelNetError(Exception):
    """Base class for all package-specific errors."""


class InvalidInput(SiegelNetError):
    """Non-finite entries or an input violating a structural precondition."""


class NotPositiveDefinite(SiegelNetError):
    """A matrix required to be SPD/HPD has an eigenvalue at or below tolerance."""


class SingularMatrix(SiegelNetError):
    """A matrix inversion ran into (numerical) singularity."""


class RankDeficient(SiegelNetError):
    """A full-column-rank factor was required but not present."""


class ShapeMismatch(SiegelNetError):
    """Operands have incompatible dimensions or product signatures."""


class DegenerateHyperplane(SiegelNetError):
    """Hyperplane direction parameter collapsed onto the origin."""


class NumericalOverflow(SiegelNetError):
    """Quantities left the representable/valid range (e.g. points at infinite separation)."""


class NotDifferentiable(SiegelNetError):
    """Requested gradient of an operation outside the differentiable set."""


class DivergedTraining(SiegelNetError):
    """Training produced a non-finite loss or left the manifold."""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")


class ConfigError(SiegelNetError):
    """Invalid experiment or dataset configuration."""


class DegenerateInput(SiegelNetError):
    """Degenerate data input (zero variance series, zero feature vector, ...)."""


class FormatError(SiegelNetError):
    """Malformed serialized file; message carries the location of the defect."""
