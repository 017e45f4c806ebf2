# ==================== IMPORTS ====================
# Numerics
import math
import numpy as np
from dataclasses import dataclass
from functools import reduce
from typing import List, Optional, Sequence, Tuple

# Logging
import logging

# Local modules
from constants import PROJECTIVE_TERM_FACTOR, PURSUIT_SETTINGS, TOLERANCES
from injective_norm import (
    NormBracket,
    SolverOptions,
    injective_upper,
    maximize_overlap,
    vector_injective_norm,
)
from tensor_core import ProductVector, PureState, SpaceShape, bipartition_matrix, bipartitions
from utils import InvariantError, ShapeError

logger = logging.getLogger(__name__)

Term = Tuple[complex, List[np.ndarray]]


# ==================== DECOMPOSITIONS ====================

@dataclass(frozen=True)
class ProductDecomposition:
    """xi = sum_k c_k p_k with product unit vectors p_k; cost sum_k |c_k|."""

    coefficients: Tuple[complex, ...]
    products: Tuple[ProductVector, ...]

    def __post_init__(self):
        if len(self.coefficients) != len(self.products):
            raise ShapeError("one coefficient per product is required")
        object.__setattr__(self, "coefficients", tuple(complex(c) for c in self.coefficients))

    @classmethod
    def from_terms(cls, terms: Sequence[Term]) -> "ProductDecomposition":
        coefficients, products = [], []
        for coefficient, factors in terms:
            norms = [np.linalg.norm(f) for f in factors]
            coefficients.append(coefficient * float(np.prod(norms)))
            products.append(ProductVector(tuple(f / n for f, n in zip(factors, norms))))
        return cls(tuple(coefficients), tuple(products))

    @property
    def terms(self) -> List[Tuple[complex, ProductVector]]:
        return list(zip(self.coefficients, self.products))

    @property
    def cost(self) -> float:
        return float(sum(abs(c) for c in self.coefficients))

    @property
    def num_terms(self) -> int:
        return len(self.coefficients)

    def reconstruct(self) -> np.ndarray:
        if not self.products:
            return np.zeros(0, dtype=complex)
        return sum(c * p.vector() for c, p in self.terms)

    def residual_norm(self, target: np.ndarray) -> float:
        return float(np.linalg.norm(self.reconstruct() - np.asarray(target).reshape(-1)))


def _expand(factors: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, factors)


def term_budget(dims: Sequence[int]) -> int:
    """PROJECTIVE_TERM_FACTOR times the product of all sorted dims but the largest."""
    return PROJECTIVE_TERM_FACTOR * math.prod(sorted(dims)[:-1])


def _cost(terms: Sequence[Term]) -> float:
    return float(sum(abs(c) for c, _ in terms))


def _reconstruction_error(terms: Sequence[Term], vector: np.ndarray) -> float:
    if not terms:
        return float(np.linalg.norm(vector))
    return float(np.linalg.norm(sum(c * _expand(f) for c, f in terms) - vector))


# ==================== UPPER-BOUND CANDIDATES ====================

def _svd_recursive(vector: np.ndarray, dims: Sequence[int]) -> List[Term]:
    """Split off the last slot by SVD and decompose every left singular vector recursively."""
    dims = tuple(dims)
    if len(dims) == 1:
        norm = float(np.linalg.norm(vector))
        return [(norm, [vector / norm])] if norm > 0 else []
    matrix = np.asarray(vector).reshape(math.prod(dims[:-1]), dims[-1])
    u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    cut = 1e-14 * (s[0] if s.size else 0.0)
    terms: List[Term] = []
    for i, sigma in enumerate(s):
        if sigma <= cut:
            continue
        if len(dims) == 2:
            terms.append((complex(sigma), [u[:, i], vh[i]]))
        else:
            for coefficient, factors in _svd_recursive(u[:, i], dims[:-1]):
                terms.append((sigma * coefficient, factors + [vh[i]]))
    return terms


def _marginal_eigenbasis(tensor: np.ndarray, slot: int) -> np.ndarray:
    unfolding = np.moveaxis(tensor, slot, 0).reshape(tensor.shape[slot], -1)
    _, vectors = np.linalg.eigh(unfolding @ unfolding.conj().T)
    return vectors[:, ::-1]


def _basis_expansion(vector: np.ndarray, dims: Sequence[int], bases: Sequence[np.ndarray]) -> List[Term]:
    """
    Expand over a product basis of every slot but the largest one.

    Each multi-index i of the fixed slots contributes ||w_i|| (b_i (x) w_i / ||w_i||),
    so the cost is sum_i ||w_i|| <= sqrt(prod of the fixed dims).
    """
    dims = tuple(dims)
    free = len(dims) - 1 - int(np.argmax(dims[::-1]))
    tensor = np.asarray(vector).reshape(dims)
    for slot in range(len(dims)):
        if slot == free:
            continue
        tensor = np.moveaxis(np.tensordot(bases[slot].conj().T, tensor, axes=([1], [slot])), 0, slot)
    rows = np.moveaxis(tensor, free, -1).reshape(-1, dims[free])
    fixed_dims = tuple(d for k, d in enumerate(dims) if k != free)
    fixed_slots = [k for k in range(len(dims)) if k != free]
    terms: List[Term] = []
    for row_index, row in enumerate(rows):
        weight = float(np.linalg.norm(row))
        if weight <= 1e-15:
            continue
        multi = np.unravel_index(row_index, fixed_dims)
        factors: List[np.ndarray] = [np.empty(0)] * len(dims)
        for slot, index in zip(fixed_slots, multi):
            factors[slot] = bases[slot][:, index]
        factors[free] = row / weight
        terms.append((complex(weight), factors))
    return terms


def _greedy_pursuit(vector: np.ndarray, dims: Sequence[int], opts: SolverOptions, budget: int) -> List[Term]:
    """Add the nearest product of the residual, then refit every coefficient by least squares."""
    atoms: List[List[np.ndarray]] = []
    columns: List[np.ndarray] = []
    coefficients = np.zeros(0, dtype=complex)
    residual = vector.copy()
    pursuit_opts = opts.derived(restarts=min(opts.restarts, PURSUIT_SETTINGS["dual_restarts"]))
    rounds = min(budget, PURSUIT_SETTINGS["greedy_rounds"])
    for round_index in range(rounds):
        residual_norm = float(np.linalg.norm(residual))
        if residual_norm < TOLERANCES["residual_stop"]:
            break
        factors, _, _, _ = maximize_overlap((residual / residual_norm).reshape(dims),
                                            pursuit_opts.with_seed_offset(1000 * (round_index + 1)))
        atoms.append(factors)
        columns.append(_expand(factors))
        matrix = np.stack(columns, axis=1)
        coefficients = np.linalg.lstsq(matrix, vector, rcond=None)[0]
        residual = vector - matrix @ coefficients
    logger.debug(f"Greedy pursuit: {len(atoms)} atoms, residual {np.linalg.norm(residual):.3g}")
    return [(complex(c), f) for c, f in zip(coefficients, atoms)]


def _reweighted_least_squares(matrix: np.ndarray, vector: np.ndarray,
                              iterations: int, epsilon: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    l1-minimal coefficients over a dictionary by iterative reweighting.

    Minimizes sum_j |c_j|^2 / w_j subject to P c = xi with w_j = |c_j| from the
    previous pass: c = W P^H lam with (P W P^H) lam = xi. On the support,
    p_j^H lam = c_j / |c_j|, so lam is the dual candidate.
    """
    weights = np.ones(matrix.shape[1])
    coefficients = np.zeros(matrix.shape[1], dtype=complex)
    multiplier = np.zeros_like(vector)
    for _ in range(iterations):
        gram = (matrix * weights) @ matrix.conj().T
        multiplier = np.linalg.lstsq(gram, vector, rcond=1e-13)[0]
        coefficients = weights * (matrix.conj().T @ multiplier)
        weights = np.maximum(np.abs(coefficients), epsilon)
    return coefficients, multiplier


def _column_generation(vector: np.ndarray, dims: Tuple[int, ...], atoms: List[List[np.ndarray]],
                       opts: SolverOptions, budget: int) -> Tuple[List[Term], List[np.ndarray]]:
    """Reweighted pursuit; nearest_product of the dual enters while its overlap exceeds 1."""
    atoms = list(atoms)
    columns = [_expand(f) for f in atoms]
    duals: List[np.ndarray] = []
    coefficients = np.zeros(len(atoms), dtype=complex)
    dual_opts = opts.derived(restarts=min(opts.restarts, PURSUIT_SETTINGS["dual_restarts"]))
    for round_index in range(PURSUIT_SETTINGS["column_rounds"]):
        matrix = np.stack(columns, axis=1)
        coefficients, multiplier = _reweighted_least_squares(
            matrix, vector, PURSUIT_SETTINGS["irls_iterations"], PURSUIT_SETTINGS["irls_epsilon"])
        scale = float(np.linalg.norm(multiplier))
        if scale == 0.0:
            break
        duals.append(multiplier)
        factors, overlap, _, _ = maximize_overlap((multiplier / scale).reshape(dims),
                                                  dual_opts.with_seed_offset(round_index))
        overlap *= scale
        logger.debug(f"Column round {round_index}: cost {np.sum(np.abs(coefficients)):.10f}, "
                     f"dual overlap {overlap:.10f}")
        if overlap <= 1.0 + 1e-9:
            break
        atoms.append(factors)
        columns.append(_expand(factors))
    # Prune to the support and refit exactly
    magnitudes = np.abs(coefficients)
    order = np.argsort(-magnitudes)
    keep = [int(j) for j in order[:budget] if magnitudes[j] > 1e-10 * max(magnitudes.max(), 1e-300)]
    if not keep:
        return [], duals
    support = np.stack([columns[j] for j in keep], axis=1)
    refit = np.linalg.lstsq(support, vector, rcond=None)[0]
    return [(complex(c), atoms[j]) for c, j in zip(refit, keep)], duals


def _cheap_candidates(vector: np.ndarray, dims: Tuple[int, ...]) -> List[Tuple[str, List[Term]]]:
    tensor = vector.reshape(dims)
    identity_bases = [np.eye(d, dtype=complex) for d in dims]
    marginal_bases = [_marginal_eigenbasis(tensor, k) for k in range(len(dims))]
    return [
        ("SVD split with recursive factors", _svd_recursive(vector, dims)),
        ("standard product-basis expansion", _basis_expansion(vector, dims, identity_bases)),
        ("marginal-eigenbasis expansion", _basis_expansion(vector, dims, marginal_bases)),
    ]


def _pursuit_candidates(vector: np.ndarray, dims: Tuple[int, ...], opts: SolverOptions, budget: int,
                        seeds: Sequence[Tuple[str, List[Term]]]) -> Tuple[List[Tuple[str, List[Term]]], List[np.ndarray]]:
    candidates = []
    if len(dims) > 2:
        candidates.append(("greedy pursuit with least-squares refit", _greedy_pursuit(vector, dims, opts, budget)))
    atoms = [f for _, terms in list(seeds) + candidates for _, f in terms]
    refined, duals = _column_generation(vector, dims, atoms, opts, budget)
    candidates.append(("reweighted pursuit with column generation", refined))
    return candidates, duals


# ==================== LOWER-BOUND CANDIDATES ====================

def _grouped_schmidt_duals(vector: np.ndarray, dims: Tuple[int, ...]) -> List[np.ndarray]:
    """U V^H of every bipartition matrix, reshaped back to slot order."""
    duals = []
    for left in bipartitions(len(dims)):
        right = [k for k in range(len(dims)) if k not in left]
        order = list(left) + right
        u, _, vh = np.linalg.svd(bipartition_matrix(vector, dims, left), full_matrices=False)
        grouped = (u @ vh).reshape([dims[k] for k in order])
        duals.append(np.transpose(grouped, np.argsort(order)).reshape(-1))
    return duals


def _dual_value(vector: np.ndarray, dual: np.ndarray, dims: Tuple[int, ...], use_net: bool) -> float:
    bound = injective_upper(dual, dims, use_net=use_net)
    if bound <= 0.0:
        return 0.0
    return abs(complex(np.vdot(dual, vector))) / bound


# ==================== PUBLIC API ====================

def vector_projective_norm(vector: np.ndarray, dims: Sequence[int], opts: Optional[SolverOptions] = None,
                           generic: bool = False) -> NormBracket:
    """
    Projective (greatest cross) norm bracket of a vector of any nonzero norm.

    Args:
        vector: Flat amplitudes
        dims: Factor dimensions
        opts: Solver options
        generic: Run the multipartite machinery even for two slots

    Returns:
        NormBracket with the best ProductDecomposition as upper_decomposition and
        the best dual vector as lower_certificate
    """
    opts = opts if opts is not None else SolverOptions()
    vector = np.asarray(vector, dtype=complex).reshape(-1)
    dims = tuple(int(d) for d in dims)
    if vector.size != math.prod(dims):
        raise ShapeError(f"vector of length {vector.size} does not fit dims {dims}")
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise InvariantError("the projective norm is only probed on nonzero vectors")
    unit = vector / norm

    if len(dims) == 2 and not generic:
        u, s, vh = np.linalg.svd(unit.reshape(dims), full_matrices=False)
        terms = [(complex(sigma), [u[:, i], vh[i]]) for i, sigma in enumerate(s) if sigma > 1e-15]
        nuclear = float(np.sum(s))
        decomposition = ProductDecomposition.from_terms([(c * norm, f) for c, f in terms])
        return NormBracket.ordered(nuclear * norm, nuclear * norm, lower_certificate=(u @ vh).reshape(-1),
                                   upper_certificate="exact: nuclear norm of the bipartite matrix",
                                   upper_decomposition=decomposition)

    budget = term_budget(dims)
    cap = math.sqrt(math.prod(sorted(dims)[:-1]))
    closure = TOLERANCES["projective_closure"]

    best_terms: List[Term] = []
    best_cost, best_label = math.inf, ""

    def consider(candidates: Sequence[Tuple[str, List[Term]]]) -> None:
        nonlocal best_terms, best_cost, best_label
        for label, terms in candidates:
            if not terms or len(terms) > budget:
                continue
            error = _reconstruction_error(terms, unit)
            cost = _cost(terms)
            logger.debug(f"Candidate '{label}': {len(terms)} terms, cost {cost:.10f}, residual {error:.3g}")
            if error <= 1e-9 and cost < best_cost:
                best_terms, best_cost, best_label = terms, cost, label

    lower, best_dual = 1.0, unit
    ranked_duals: List[Tuple[float, int, np.ndarray]] = []

    def consider_duals(duals: Sequence[np.ndarray]) -> None:
        nonlocal lower, best_dual
        for dual in duals:
            value = _dual_value(unit, dual, dims, use_net=False)
            ranked_duals.append((value, len(ranked_duals), dual))
            if value > lower:
                lower, best_dual = value, dual

    def closed() -> bool:
        return min(best_cost, cap) - lower <= closure * max(1.0, lower)

    cheap = _cheap_candidates(unit, dims)
    consider(cheap)
    consider_duals([unit] + _grouped_schmidt_duals(unit, dims))
    if not closed():
        pursuit, pursuit_duals = _pursuit_candidates(unit, dims, opts, budget, cheap)
        consider(pursuit)
        random_duals = []
        for restart in range(min(opts.restarts, PURSUIT_SETTINGS["dual_restarts"])):
            rng = np.random.default_rng(opts.seed + restart)
            random_duals.append(rng.standard_normal(unit.size) + 1j * rng.standard_normal(unit.size))
        consider_duals(pursuit_duals[-3:] + random_duals)
    if not closed():
        # Covering nets only for the vector itself and the two best spectral duals
        finalists = [unit] + [dual for _, _, dual in sorted(ranked_duals, key=lambda item: (-item[0], item[1]))[:2]]
        for dual in finalists:
            value = _dual_value(unit, dual, dims, use_net=True)
            if value > lower:
                lower, best_dual = value, dual
            if closed():
                break

    upper, description = best_cost, best_label
    if cap < upper:
        upper, description = cap, "a-priori cap sqrt(n_1...n_{N-1})"

    decomposition = None
    if best_terms:
        decomposition = ProductDecomposition.from_terms([(c * norm, f) for c, f in best_terms])
    logger.info(f"Projective bracket for dims {dims}: [{lower * norm:.10f}, {upper * norm:.10f}] ({description})")
    return NormBracket.ordered(lower * norm, upper * norm, lower_certificate=best_dual,
                               upper_certificate=description, upper_decomposition=decomposition)


def projective_norm(state: PureState, opts: Optional[SolverOptions] = None, generic: bool = False) -> NormBracket:
    """Certified bracket for ||xi||^V = ||xi||_gamma."""
    return vector_projective_norm(state.amplitudes, state.dims, opts, generic=generic)


@dataclass(frozen=True)
class DecomposabilityVerdict:
    decomposable: bool
    overlap: float
    certificate: Optional[ProductVector]


def is_decomposable(state: PureState, opts: Optional[SolverOptions] = None, tol: float = 1e-6) -> DecomposabilityVerdict:
    """Decomposable iff the injective lower endpoint reaches 1 - tol."""
    bracket = vector_injective_norm(state.amplitudes, state.dims, opts)
    decomposable = bracket.lower >= 1.0 - tol
    return DecomposabilityVerdict(decomposable, bracket.lower,
                                  bracket.lower_certificate if decomposable else None)


@dataclass(frozen=True)
class HullVerdict:
    verdict: str
    bracket: NormBracket


def hull_membership(vector: np.ndarray, shape: SpaceShape, opts: Optional[SolverOptions] = None) -> HullVerdict:
    """
    Membership in the closed convex hull of V (the projective unit ball).

    inside if the upper endpoint is <= 1 + 1e-9, outside if the lower endpoint
    exceeds it, undecided otherwise.
    """
    vector = np.asarray(vector, dtype=complex).reshape(-1)
    if vector.size != shape.total_dim:
        raise ShapeError(f"vector of length {vector.size} does not fit shape {shape}")
    if float(np.linalg.norm(vector)) == 0.0:
        return HullVerdict("inside", NormBracket(0.0, 0.0, upper_certificate="zero vector"))
    bracket = vector_projective_norm(vector, shape.dims, opts)
    boundary = 1.0 + TOLERANCES["hull_boundary"]
    if bracket.upper <= boundary:
        verdict = "inside"
    elif bracket.lower > boundary:
        verdict = "outside"
    else:
        verdict = "undecided"
    return HullVerdict(verdict, bracket)
