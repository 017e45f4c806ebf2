# ==================== IMPORTS ====================
# Numerics
import numpy as np
from typing import Tuple

# Logging
import logging

# Local modules
from constants import TOLERANCES

logger = logging.getLogger(__name__)


# ==================== ERRORS ====================

class TensorGeometryError(ValueError):
    """Base class for every error raised by the library."""


class BoundsError(TensorGeometryError):
    """Index or split out of range."""


class ShapeError(TensorGeometryError):
    """Dimension mismatch or size cap exceeded."""


class InvariantError(TensorGeometryError):
    """A value violates a type invariant (unit norm, Hermitian, trace, positivity)."""


class UnsupportedShapeError(TensorGeometryError):
    """The construction needs n_N >= n_1...n_{N-1}."""


class PreconditionError(TensorGeometryError):
    """An operation contract is not met by its inputs."""


class StateFileError(TensorGeometryError):
    """Malformed or inconsistent StateFile."""


# ==================== LOGGING ====================

def configure_logging(verbose: bool = False) -> None:
    """Configure root logging for the command-line entry point (stderr)."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


# ==================== VALIDATION ====================

def check_unit_norm(vector: np.ndarray, tol: float = TOLERANCES["unit_norm"], what: str = "vector") -> float:
    """
    Validate that a vector has unit Euclidean norm.

    Args:
        vector: Complex array
        tol: Admissible deviation from 1
        what: Name used in the error message

    Returns:
        The computed norm
    """
    norm = float(np.linalg.norm(vector))
    if not np.isfinite(norm):
        raise InvariantError(f"{what} contains non-finite entries")
    if abs(norm - 1.0) > tol:
        raise InvariantError(f"{what} must have unit norm, got {norm:.12g}")
    return norm


def check_hermitian(matrix: np.ndarray, tol: float = TOLERANCES["hermitian"], what: str = "operator") -> None:
    """Validate entrywise Hermiticity."""
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ShapeError(f"{what} must be square, got shape {matrix.shape}")
    deviation = float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0
    if deviation > tol:
        raise InvariantError(f"{what} is not Hermitian (max deviation {deviation:.3g})")


def check_density(matrix: np.ndarray, tol: float = TOLERANCES["trace"],
                  min_eigenvalue: float = TOLERANCES["min_eigenvalue"]) -> Tuple[float, float]:
    """
    Validate a density matrix: Hermitian, unit trace, positive semidefinite.

    Returns:
        Tuple of (trace, smallest eigenvalue)
    """
    check_hermitian(matrix, max(tol, TOLERANCES["hermitian"]), what="density operator")
    trace = float(np.real(np.trace(matrix)))
    if abs(trace - 1.0) > tol:
        raise InvariantError(f"density operator must have unit trace, got {trace:.12g}")
    smallest = float(np.linalg.eigvalsh((matrix + matrix.conj().T) / 2)[0])
    if smallest < min_eigenvalue:
        raise InvariantError(f"density operator has negative eigenvalue {smallest:.3g}")
    return trace, smallest


def hermitian_part(matrix: np.ndarray) -> np.ndarray:
    """Return (X + X^H) / 2."""
    return (matrix + matrix.conj().T) / 2
