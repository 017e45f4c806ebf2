# ==================== IMPORTS ====================
# Numerics
import math
import numpy as np
from dataclasses import dataclass
from typing import Optional, Tuple

# Logging
import logging

# Local modules
from constants import TOLERANCES
from injective_norm import NormBracket, SolverOptions, injective_norm
from projective_norm import projective_norm
from tensor_core import (
    PureState,
    SpaceShape,
    apply_local,
    matricize,
    partial_trace_last,
    pure_density,
    random_unitary,
)
from utils import InvariantError, PreconditionError, ShapeError, UnsupportedShapeError

logger = logging.getLogger(__name__)

VERDICT_MAXIMAL = "maximal"
VERDICT_PROBABLY_MAXIMAL = "probably-maximal"
VERDICT_NOT_MAXIMAL = "not-maximal"
VERDICT_UNKNOWN = "unknown-inner-radius"


def require_maximal_shape(shape: SpaceShape) -> int:
    """Return m = n_1...n_{N-1}, raising unless n_N >= m."""
    m = shape.left_dim
    if shape.dims[-1] < m:
        raise UnsupportedShapeError(
            f"shape {shape} needs n_N >= n_1...n_(N-1) for this construction, got {shape.dims[-1]} < {m}"
        )
    return m


def closed_form_inner_radius(shape: SpaceShape) -> Optional[float]:
    """1 / sqrt(n_1...n_{N-1}) on sorted dims when the largest factor dominates, else None."""
    dims = sorted(shape.dims)
    m = math.prod(dims[:-1])
    if dims[-1] >= m:
        return 1.0 / math.sqrt(m)
    return None


# ==================== MAXIMAL FORMS ====================

@dataclass(frozen=True)
class MaximalForm:
    """
    xi = (1 / sqrt(m)) sum_k e_k (x) f_k.

    left_basis holds the e_k as columns of an m x m unitary over the first N-1
    grouped slots; right_frame holds the f_k as m orthonormal columns in slot N.
    """

    shape: SpaceShape
    left_basis: np.ndarray
    right_frame: np.ndarray

    def __post_init__(self):
        m = require_maximal_shape(self.shape)
        left = np.asarray(self.left_basis, dtype=complex)
        frame = np.asarray(self.right_frame, dtype=complex)
        if left.shape != (m, m) or frame.shape != (self.shape.dims[-1], m):
            raise ShapeError(f"maximal form on {self.shape} needs a {m}x{m} basis and a "
                             f"{self.shape.dims[-1]}x{m} frame, got {left.shape} and {frame.shape}")
        identity = np.eye(m)
        if np.max(np.abs(left.conj().T @ left - identity)) > 1e-9:
            raise InvariantError("left_basis is not unitary")
        if np.max(np.abs(frame.conj().T @ frame - identity)) > 1e-9:
            raise InvariantError("right_frame columns are not orthonormal")
        left.setflags(write=False)
        frame.setflags(write=False)
        object.__setattr__(self, "left_basis", left)
        object.__setattr__(self, "right_frame", frame)

    @property
    def m(self) -> int:
        return self.shape.left_dim

    def state(self) -> PureState:
        matrix = self.left_basis @ self.right_frame.T / math.sqrt(self.m)
        return PureState(self.shape, matrix.reshape(-1))

    @classmethod
    def canonical(cls, shape: SpaceShape) -> "MaximalForm":
        m = require_maximal_shape(shape)
        return cls(shape, np.eye(m, dtype=complex), np.eye(shape.dims[-1], m, dtype=complex))


def maximal_form(shape: SpaceShape, seed: int) -> MaximalForm:
    """Random (seeded) unitary left basis and orthonormal frame."""
    m = require_maximal_shape(shape)
    rng = np.random.default_rng(seed)
    left = random_unitary(m, rng)
    frame = random_unitary(shape.dims[-1], rng)[:, :m]
    return MaximalForm(shape, left, frame)


def make_maximal(shape: SpaceShape, seed: int = 0, canonical: bool = False) -> PureState:
    """Maximal vector of a shape with n_N >= n_1...n_{N-1}."""
    form = MaximalForm.canonical(shape) if canonical else maximal_form(shape, seed)
    return form.state()


# ==================== VERDICTS ====================

@dataclass(frozen=True)
class MaximalityVerdict:
    """Verdict plus the three extremal quantities, each checked from certified endpoints."""

    verdict: str
    inner_radius: Optional[float]
    injective: NormBracket
    distance: NormBracket
    projective: Optional[NormBracket] = None
    injective_minimal: bool = False
    projective_maximal: bool = False
    distance_maximal: bool = False

    @property
    def is_maximal(self) -> bool:
        return self.verdict == VERDICT_MAXIMAL

    @property
    def all_extremal(self) -> bool:
        return self.injective_minimal and self.projective_maximal and self.distance_maximal

    @property
    def none_extremal(self) -> bool:
        return not (self.injective_minimal or self.projective_maximal or self.distance_maximal)


def _distance_from_injective(bracket: NormBracket) -> NormBracket:
    return NormBracket.ordered(math.sqrt(max(0.0, 2.0 - 2.0 * bracket.upper)),
                               math.sqrt(max(0.0, 2.0 - 2.0 * bracket.lower)),
                               upper_certificate="sqrt(2 - 2 t) of the injective bracket")


def is_maximal(state: PureState, opts: Optional[SolverOptions] = None, tol: float = 1e-6,
               evidence: bool = True) -> MaximalityVerdict:
    """
    Maximality test through the injective upper endpoint.

    Args:
        state: Unit vector
        opts: Solver options
        tol: Comparison tolerance
        evidence: Also bracket the projective norm for the simultaneity record

    Returns:
        MaximalityVerdict; shapes without a closed-form inner radius get
        'unknown-inner-radius' and no comparison is made
    """
    injective = injective_norm(state, opts)
    distance = _distance_from_injective(injective)
    r = closed_form_inner_radius(state.shape)
    if r is None:
        logger.warning(f"No closed-form inner radius for shape {state.shape}; maximality left open")
        return MaximalityVerdict(VERDICT_UNKNOWN, None, injective, distance)

    projective = projective_norm(state, opts) if evidence else None
    injective_minimal = injective.upper <= r + tol
    projective_maximal = projective is not None and projective.lower >= 1.0 / r - tol
    distance_maximal = distance.lower >= math.sqrt(2.0 * (1.0 - r)) - tol

    if injective_minimal:
        verdict = VERDICT_MAXIMAL
    elif injective.lower <= r + tol:
        verdict = VERDICT_PROBABLY_MAXIMAL
    else:
        verdict = VERDICT_NOT_MAXIMAL
    logger.info(f"Maximality on {state.shape}: {verdict} (injective [{injective.lower:.10f}, "
                f"{injective.upper:.10f}], r = {r:.10f})")
    return MaximalityVerdict(verdict, r, injective, distance, projective,
                             injective_minimal, projective_maximal, distance_maximal)


@dataclass(frozen=True)
class PurificationResult:
    passes: bool
    deviation: float


def purification_check(state: PureState, threshold: float = TOLERANCES["purification"]) -> PurificationResult:
    """Max-entry distance of the marginal over slots 1..N-1 from identity / m."""
    marginal = partial_trace_last(pure_density(state)).matrix
    m = marginal.shape[0]
    deviation = float(np.max(np.abs(marginal - np.eye(m) / m)))
    return PurificationResult(deviation <= threshold, deviation)


# ==================== LOCAL UNITARY TRANSITIVITY ====================

def _complete_unitary(columns: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a unitary by Gram-Schmidt over the standard basis in order."""
    n = columns.shape[0]
    basis = [columns[:, k] for k in range(columns.shape[1])]
    for i in range(n):
        if len(basis) == n:
            break
        candidate = np.zeros(n, dtype=complex)
        candidate[i] = 1.0
        for _ in range(2):
            for vector in basis:
                candidate = candidate - np.vdot(vector, candidate) * vector
        norm = float(np.linalg.norm(candidate))
        if norm > 1e-8:
            basis.append(candidate / norm)
    return np.stack(basis, axis=1)


def connect_maximal(first: PureState, second: PureState) -> np.ndarray:
    """
    Unitary U on slot N with (1 (x) ... (x) 1 (x) U) first = second.

    With A_i the (m x n_N) matricizations, Q_i = (sqrt(m) A_i)^H has orthonormal
    columns; completing Q_i to unitaries W_i gives U = conj(W_2 W_1^H).
    """
    if first.shape != second.shape:
        raise ShapeError(f"shapes differ: {first.shape} vs {second.shape}")
    m = require_maximal_shape(first.shape)
    threshold = TOLERANCES["connect_precondition"]
    for label, state in (("first", first), ("second", second)):
        result = purification_check(state, threshold)
        if not result.passes:
            raise PreconditionError(f"{label} vector is not maximal (purification deviation {result.deviation:.3g})")
    split = first.shape.num_slots - 1
    frames = []
    for state in (first, second):
        isometry = (math.sqrt(m) * matricize(state, split)).conj().T
        frames.append(_complete_unitary(isometry))
    unitary = np.conj(frames[1] @ frames[0].conj().T)
    residual, defect = connection_residual(first, second, unitary)
    logger.info(f"Connected maximal vectors on {first.shape}: residual {residual:.3g}, unitarity defect {defect:.3g}")
    return unitary


# ==================== REFINEMENT ====================

@dataclass(frozen=True)
class RefinementReport:
    fine: MaximalityVerdict
    coarse: MaximalityVerdict

    @property
    def agree(self) -> bool:
        return self.fine.is_maximal == self.coarse.is_maximal


def refinement_agreement(state: PureState, opts: Optional[SolverOptions] = None,
                         tol: float = 1e-6) -> RefinementReport:
    """Maximality verdicts under the fine shape and under (n_1...n_{N-1}, n_N)."""
    require_maximal_shape(state.shape)
    fine = is_maximal(state, opts, tol, evidence=False)
    coarse = is_maximal(state.with_shape(state.shape.coarsened()), opts, tol, evidence=False)
    report = RefinementReport(fine, coarse)
    if not report.agree:
        logger.warning(f"Refinement disagreement on {state.shape}: {fine.verdict} vs {coarse.verdict}")
    return report


def connection_residual(first: PureState, second: PureState, unitary: np.ndarray) -> Tuple[float, float]:
    """(||(1 (x) U) first - second||, max |U^H U - I|)."""
    split = first.shape.num_slots - 1
    residual = float(np.linalg.norm(apply_local(first, unitary, split).amplitudes - second.amplitudes))
    defect = float(np.max(np.abs(unitary.conj().T @ unitary - np.eye(unitary.shape[0]))))
    return residual, defect
