# ==================== IMPORTS ====================
# Numerics
import math
import numpy as np
from dataclasses import dataclass
from functools import reduce
from typing import List, Optional, Tuple

# Logging
import logging

# Local modules
from constants import SEARCH_SETTINGS
from injective_norm import NormBracket, SolverOptions, injective_upper, maximize_overlap, operator_injective_norm
from maximal_vectors import closed_form_inner_radius, make_maximal
from tensor_core import (
    PureState,
    SpaceShape,
    basis_vector,
    bipartitions,
    expand_product,
    random_product,
    random_state,
    standard_state,
)
from utils import UnsupportedShapeError

logger = logging.getLogger(__name__)

MODE_CLOSED_FORM = "closed-form"
MODE_SEARCH = "search"


@dataclass(frozen=True)
class InnerRadiusResult:
    """r(V) bracket; `strict` marks lower endpoints the true value strictly exceeds."""

    bracket: NormBracket
    mode: str
    minimizer: Optional[PureState] = None
    strict: bool = False


def _maximal_in_slot_order(shape: SpaceShape, seed: int) -> PureState:
    """make_maximal on the sorted shape, transposed back to the given slot order."""
    order = sorted(range(shape.num_slots), key=lambda k: (shape.dims[k], k))
    sorted_shape = SpaceShape(tuple(shape.dims[k] for k in order))
    tensor = make_maximal(sorted_shape, seed).tensor
    return PureState(shape, np.transpose(tensor, np.argsort(order)).reshape(-1))


# ==================== CANDIDATES ====================

def _flat_schmidt(dims: Tuple[int, ...], left: Tuple[int, ...]) -> np.ndarray:
    """(1 / sqrt(k)) sum_i e_i (x) e_i across a bipartition, k = min of the grouped dims."""
    right = [k for k in range(len(dims)) if k not in left]
    order = list(left) + right
    rows = math.prod(dims[k] for k in left)
    cols = math.prod(dims[k] for k in right)
    rank = min(rows, cols)
    matrix = np.eye(rows, cols, dtype=complex) / math.sqrt(rank)
    tensor = matrix.reshape([dims[k] for k in order])
    return np.transpose(tensor, np.argsort(order)).reshape(-1)


def _structured_candidates(shape: SpaceShape) -> List[Tuple[str, np.ndarray]]:
    dims = shape.dims
    candidates = [("ghz", standard_state("ghz", shape).amplitudes)]
    if min(dims) >= 2:
        candidates.append(("w", standard_state("w", shape).amplitudes))
    if shape.num_slots >= 3:
        bell = standard_state("bell", SpaceShape(dims[:2])).amplitudes
        rest = [basis_vector(d, 0) for d in dims[2:]]
        candidates.append(("bell (x) e0", reduce(np.kron, [bell] + rest)))
    for left in bipartitions(shape.num_slots):
        label = "flat schmidt {" + ",".join(str(k + 1) for k in left) + "}"
        candidates.append((label, _flat_schmidt(dims, left)))
    return candidates


def _inner_options(opts: SolverOptions, offset: int) -> SolverOptions:
    return opts.derived(restarts=SEARCH_SETTINGS["inner_restarts"],
                        max_iterations=min(opts.max_iterations, 200),
                        seed=opts.seed + offset)


def _score(vector: np.ndarray, dims: Tuple[int, ...], opts: SolverOptions) -> float:
    _, value, _, _ = maximize_overlap(vector.reshape(dims), opts)
    return value


# ==================== SPHERE DESCENT ====================

def _descend(vector: np.ndarray, dims: Tuple[int, ...], opts: SolverOptions) -> Tuple[np.ndarray, float]:
    """
    Projected gradient descent of a smoothed max over an active set of product overlaps.

    The max of |<xi, p>|^2 over the active set is replaced by a log-sum-exp at
    temperature beta, which doubles every `anneal_every` iterations.
    """
    xi = vector / np.linalg.norm(vector)
    beta = SEARCH_SETTINGS["temperature"]
    step = SEARCH_SETTINGS["step_size"]
    active: List[np.ndarray] = []
    warm: List[np.ndarray] = []
    best_xi, best_value = xi.copy(), math.inf
    for iteration in range(SEARCH_SETTINGS["descent_iterations"]):
        if iteration and iteration % SEARCH_SETTINGS["anneal_every"] == 0:
            beta *= SEARCH_SETTINGS["anneal_factor"]
        factors, value, _, _ = maximize_overlap(xi.reshape(dims), opts, warm_starts=[warm] if warm else ())
        warm = factors
        if value < best_value:
            best_xi, best_value = xi.copy(), value
        active.append(reduce(np.kron, factors))
        active = active[-32:]
        products = np.stack(active, axis=1)
        overlaps = products.conj().T @ xi
        gains = np.abs(overlaps) ** 2
        weights = np.exp(beta * (gains - gains.max()))
        weights /= weights.sum()
        gradient = products @ (weights * overlaps)
        tangent = gradient - xi * np.real(np.vdot(xi, gradient))
        xi = xi - step * tangent
        xi /= np.linalg.norm(xi)
    return best_xi, best_value


def _search_minimum(shape: SpaceShape, opts: SolverOptions) -> Tuple[float, PureState, str]:
    dims = shape.dims
    pool: List[Tuple[str, np.ndarray, float]] = []
    for index, (label, vector) in enumerate(_structured_candidates(shape)):
        pool.append((label, vector, _score(vector, dims, _inner_options(opts, index))))
    structured_count = len(pool)
    for restart in range(opts.restarts):
        vector = random_state(shape, opts.seed + restart).amplitudes
        pool.append((f"random {restart}", vector, _score(vector, dims, _inner_options(opts, restart))))

    ranked = sorted(pool, key=lambda item: item[2])
    for index, (label, vector, _) in enumerate(ranked[:SEARCH_SETTINGS["descent_starts"]]):
        refined, value = _descend(vector, dims, _inner_options(opts, 10_000 + index))
        logger.debug(f"Descent from '{label}': smoothed objective settled at {value:.10f}")
        pool.append((f"descent from {label}", refined, value))

    ranked = sorted(pool, key=lambda item: item[2])
    to_certify = sorted({id(item): item for item in ranked[:SEARCH_SETTINGS["descent_starts"]] + pool[:structured_count]}.values(),
                        key=lambda item: item[2])
    best_upper, best_vector, best_label = math.inf, None, ""
    for label, vector, score in to_certify:
        # score is an attained overlap, so no upper bound can fall below it
        if score >= best_upper:
            continue
        upper = injective_upper(vector, dims, lower=score)
        if upper < best_upper:
            best_upper, best_vector, best_label = upper, vector, label
    logger.info(f"Inner radius search on {shape}: best certified upper {best_upper:.10f} at '{best_label}'")
    return best_upper, PureState(shape, best_vector / np.linalg.norm(best_vector)), best_label


# ==================== PUBLIC API ====================

def inner_radius(shape: SpaceShape, opts: Optional[SolverOptions] = None,
                 force_search: bool = False) -> InnerRadiusResult:
    """
    r(V) for a shape.

    Closed form 1 / sqrt(n_1...n_{N-1}) (sorted dims) when the largest factor
    dominates the product of the others; otherwise, or when `force_search` is
    set, the upper endpoint comes from a multi-start sphere search over the
    certified injective upper endpoint.
    """
    opts = opts if opts is not None else SolverOptions()
    r = closed_form_inner_radius(shape)
    if r is not None and not force_search:
        bracket = NormBracket(r, r, upper_certificate="closed form 1/sqrt(n_1...n_{N-1})")
        return InnerRadiusResult(bracket, MODE_CLOSED_FORM, _maximal_in_slot_order(shape, opts.seed))

    floor = 1.0 / math.sqrt(math.prod(sorted(shape.dims)[:-1]))
    upper, minimizer, label = _search_minimum(shape, opts)
    lower = r if r is not None else floor
    bracket = NormBracket.ordered(lower, upper, lower_certificate=minimizer,
                                  upper_certificate=f"certified injective upper at '{label}'",
                                  restarts_used=opts.restarts)
    return InnerRadiusResult(bracket, MODE_SEARCH, minimizer, strict=r is None)


def sup_distance(shape: SpaceShape, opts: Optional[SolverOptions] = None,
                 force_search: bool = False) -> NormBracket:
    """sup of d(xi, V) over unit xi, i.e. sqrt(2 (1 - r(V)))."""
    bracket = inner_radius(shape, opts, force_search).bracket
    return NormBracket.ordered(math.sqrt(max(0.0, 2.0 * (1.0 - bracket.upper))),
                               math.sqrt(max(0.0, 2.0 * (1.0 - bracket.lower))),
                               upper_certificate="sqrt(2 (1 - t)) of the inner radius bracket")


def projective_constant(shape: SpaceShape, opts: Optional[SolverOptions] = None,
                        force_search: bool = False) -> NormBracket:
    """Best c with ||xi||^V <= c ||xi||, i.e. 1 / r(V)."""
    bracket = inner_radius(shape, opts, force_search).bracket
    return NormBracket.ordered(1.0 / bracket.upper, 1.0 / bracket.lower,
                               upper_certificate="reciprocal of the inner radius bracket")


@dataclass(frozen=True)
class VBallSample:
    label: str
    ratio_lower: float
    ratio_upper: float


@dataclass(frozen=True)
class VBallReport:
    shape: SpaceShape
    target: float
    samples: Tuple[VBallSample, ...]

    @property
    def achieved_ratio(self) -> float:
        return max(s.ratio_lower for s in self.samples)

    @property
    def passed(self) -> bool:
        return self.achieved_ratio >= self.target - 1e-6


def vball_sup_check(shape: SpaceShape, opts: Optional[SolverOptions] = None) -> VBallReport:
    """
    ||X|| / ||X||_V for rank-one X = |zeta><zeta| against r(V)^-2.

    Samples the canonical minimizer, a random product vector and a random state.
    """
    opts = opts if opts is not None else SolverOptions()
    r = closed_form_inner_radius(shape)
    if r is None:
        raise UnsupportedShapeError(f"shape {shape} has no closed-form inner radius (needs n_N >= n_1...n_(N-1))")
    order = sorted(range(shape.num_slots), key=lambda k: (shape.dims[k], k))
    if list(order) == list(range(shape.num_slots)):
        minimizer = make_maximal(shape, canonical=True)
    else:
        minimizer = _maximal_in_slot_order(shape, opts.seed)
    zetas = [
        ("minimizer", minimizer),
        ("product", expand_product(random_product(shape, opts.seed), shape)),
        ("random", random_state(shape, opts.seed)),
    ]
    samples = []
    for label, zeta in zetas:
        operator = np.outer(zeta.amplitudes, zeta.amplitudes.conj())
        bracket = operator_injective_norm(operator, opts, shape)
        samples.append(VBallSample(label, 1.0 / bracket.upper, 1.0 / bracket.lower))
        logger.debug(f"V-ball ratio for {label}: [{1.0 / bracket.upper:.10f}, {1.0 / bracket.lower:.10f}]")
    report = VBallReport(shape, 1.0 / r ** 2, tuple(samples))
    logger.info(f"V-ball sup on {shape}: achieved {report.achieved_ratio:.10f}, target {report.target:.10f}")
    return report
