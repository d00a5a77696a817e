"""Exception types shared across the package."""


class ImcgasError(Exception):
    """Base class for all package errors."""


class GridMismatchError(ImcgasError):
    """Two grid-bound objects do not live on the same grid."""


class InfiniteEnergyError(ImcgasError):
    """The specific interaction energy diverges (target overlaps a hard core)."""


class InfeasibleDensityError(ImcgasError):
    """Requested density cannot be reached inside the gas phase."""


class ConvergenceError(ImcgasError):
    """An iterative solve failed to converge within its budget."""


class TruncationError(ImcgasError):
    """A requested truncation order violates the supported range."""
