# ==================== IMPORTS ====================
# Numerics
import itertools
import math
import string
import numpy as np
from dataclasses import dataclass
from functools import reduce
from typing import List, Optional, Sequence, Tuple

# Optimization
from scipy.optimize import least_squares, linprog, nnls

# Logging
import logging

# Local modules
from constants import ENTANGLEMENT_SETTINGS, SEPARABLE_ATOM_FACTOR, TOMOGRAPHIC_DICTIONARY_CAP
from injective_norm import NormBracket, SolverOptions, injective_upper, maximize_overlap, operator_injective_upper
from maximal_vectors import closed_form_inner_radius, is_maximal
from projective_norm import vector_projective_norm
from tensor_core import (
    DensityOperator,
    HermitianOperator,
    ProductVector,
    PureState,
    pure_density,
    random_unit_vector,
    trace_norm,
)
from utils import InvariantError, UnsupportedShapeError, hermitian_part

logger = logging.getLogger(__name__)

VERDICT_SEPARABLE = "separable"
VERDICT_ENTANGLED = "entangled"
VERDICT_MAXIMALLY_ENTANGLED = "maximally-entangled"
VERDICT_UNDECIDED = "undecided"

Factors = List[np.ndarray]


# ==================== CERTIFICATES ====================

@dataclass(frozen=True)
class WitnessCertificate:
    """Hermitian test operator X with certified ||X||_V <= vnorm_upper; value = trace(A X) / vnorm_upper."""

    operator: HermitianOperator
    vnorm_upper: float
    value: float
    label: str = ""

    @property
    def trace_value(self) -> float:
        return self.value * self.vnorm_upper

    def evaluate(self, rho: DensityOperator) -> float:
        return float(np.real(np.trace(rho.matrix @ self.operator.matrix))) / self.vnorm_upper


@dataclass(frozen=True)
class SeparableDecomposition:
    """sum_k w_k |p_k><p_k| with the trace-norm residual against its target."""

    weights: Tuple[float, ...]
    states: Tuple[ProductVector, ...]
    residual: float

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        if len(weights) != len(self.states):
            raise InvariantError("one weight per product state is required")
        if any(w <= 0 for w in weights):
            raise InvariantError("separable weights must be positive")
        if abs(sum(weights) - 1.0) > 1e-8:
            raise InvariantError(f"separable weights must sum to 1, got {sum(weights):.12g}")
        object.__setattr__(self, "weights", weights)

    def reconstruct(self) -> np.ndarray:
        return sum(w * np.outer(p.vector(), p.vector().conj()) for w, p in zip(self.weights, self.states))


# ==================== HERMITIAN COORDINATES ====================

def hermitian_coordinates(matrix: np.ndarray) -> np.ndarray:
    """Orthonormal real coordinates: diagonal, sqrt(2) Re and sqrt(2) Im of the strict upper triangle."""
    upper = np.triu_indices(matrix.shape[0], 1)
    return np.concatenate([np.real(np.diag(matrix)),
                           math.sqrt(2) * np.real(matrix[upper]),
                           math.sqrt(2) * np.imag(matrix[upper])])


def from_coordinates(coordinates: np.ndarray, dim: int) -> np.ndarray:
    upper = np.triu_indices(dim, 1)
    count = len(upper[0])
    matrix = np.diag(coordinates[:dim]).astype(complex)
    off = (coordinates[dim:dim + count] + 1j * coordinates[dim + count:]) / math.sqrt(2)
    matrix[upper] = off
    matrix[(upper[1], upper[0])] = np.conj(off)
    return matrix


def _projector_coordinates(columns: np.ndarray) -> np.ndarray:
    """Coordinates of |p><p| for every column p."""
    dim = columns.shape[0]
    upper = np.triu_indices(dim, 1)
    cross = columns[upper[0], :] * np.conj(columns[upper[1], :])
    return np.concatenate([np.abs(columns) ** 2,
                           math.sqrt(2) * np.real(cross),
                           math.sqrt(2) * np.imag(cross)], axis=0)


def _columns(atoms: Sequence[Factors]) -> np.ndarray:
    return np.stack([reduce(np.kron, f) for f in atoms], axis=1)


def residual_penalty(delta: np.ndarray, r: Optional[float]) -> float:
    """Upper bound on E(delta): min(r^-2 ||delta||_1, sum |delta_ij|)."""
    entrywise = float(np.sum(np.abs(delta)))
    if r is None:
        return entrywise
    return min(trace_norm(delta) / r ** 2, entrywise)


# ==================== PRODUCT DICTIONARIES ====================

def local_tomographic_states(dim: int) -> List[np.ndarray]:
    """e_j and (e_j +- e_k) / sqrt(2), (e_j +- i e_k) / sqrt(2) for j < k."""
    states = [np.eye(dim, dtype=complex)[j] for j in range(dim)]
    for j, k in itertools.combinations(range(dim), 2):
        for phase in (1, -1, 1j, -1j):
            vector = np.zeros(dim, dtype=complex)
            vector[j], vector[k] = 1 / math.sqrt(2), phase / math.sqrt(2)
            states.append(vector)
    return states


def tomographic_products(dims: Sequence[int], rng: np.random.Generator,
                         cap: int = TOMOGRAPHIC_DICTIONARY_CAP) -> List[Factors]:
    """Products of local tomographic states; a seeded sample of `cap` when the full set is larger."""
    local = [local_tomographic_states(d) for d in dims]
    count = math.prod(len(states) for states in local)
    if count <= cap:
        return [list(combo) for combo in itertools.product(*local)]
    logger.debug(f"Sampling {cap} of {count} tomographic products")
    return [[states[rng.integers(len(states))] for states in local] for _ in range(cap)]


def maximize_expectation(matrix: np.ndarray, dims: Sequence[int], rng: np.random.Generator,
                         restarts: int, starts: Sequence[Factors] = ()) -> Tuple[Factors, float]:
    """
    Maximize <p|Y|p> over product unit vectors by alternating eigen-updates.

    With every factor but one fixed, the optimal free factor is the top
    eigenvector of the compressed operator Q^H Y Q.
    """
    dims = tuple(dims)
    best_factors: Factors = []
    best_value = -math.inf
    initial = [list(s) for s in starts] + [[random_unit_vector(d, rng) for d in dims] for _ in range(restarts)]
    for factors in initial:
        value = -math.inf
        for _ in range(ENTANGLEMENT_SETTINGS["expectation_iterations"]):
            previous = value
            for slot, dim in enumerate(dims):
                pieces = [f.reshape(-1, 1) if k != slot else np.eye(dim) for k, f in enumerate(factors)]
                isometry = reduce(np.kron, pieces)
                compressed = hermitian_part(isometry.conj().T @ matrix @ isometry)
                eigenvalues, eigenvectors = np.linalg.eigh(compressed)
                factors[slot] = eigenvectors[:, -1]
                value = float(eigenvalues[-1])
            if value - previous < 1e-13:
                break
        if value > best_value:
            best_factors, best_value = factors, value
    return best_factors, best_value


# ==================== LOWER ENDPOINT: WITNESSES ====================

def make_witness(rho: DensityOperator, operator: np.ndarray, label: str, use_net: bool = True,
                 vector: Optional[np.ndarray] = None) -> Optional[WitnessCertificate]:
    """
    Normalize a Hermitian candidate by its certified V-norm upper bound.

    For a rank-one operator |v><v| pass `vector`: ||vv*||_V = (||v||_V)^2, and the
    vector bound is tighter than the operator bound on the doubled tensor.
    """
    operator = hermitian_part(np.asarray(operator, dtype=complex))
    expectation = float(np.real(np.trace(rho.matrix @ operator)))
    if expectation < 0:
        operator, expectation = -operator, -expectation
    if vector is not None:
        bound = injective_upper(vector, rho.shape.dims, use_net=use_net) ** 2
    else:
        bound = operator_injective_upper(operator, rho.shape, use_net=use_net)
    if bound <= 0.0:
        return None
    return WitnessCertificate(HermitianOperator(rho.shape, operator), bound, expectation / bound, label)


def _signed_projector_lp(rho: DensityOperator, atoms: List[Factors], rng: np.random.Generator,
                         r: Optional[float]) -> Tuple[Optional[float], Optional[np.ndarray], List[Factors], np.ndarray]:
    """
    min sum |c_k| subject to sum c_k |p_k><p_k| = A over a growing product dictionary.

    Returns (cost with residual penalty, dual operator, atoms, coefficients).
    The dual Y satisfies |<p|Y|p>| <= 1 on the dictionary; the most violated
    product enters as a new column until none exceeds 1.
    """
    dims = rho.shape.dims
    dim = rho.shape.total_dim
    target = hermitian_coordinates(rho.matrix)
    atoms = list(atoms)
    dual_matrix, coefficients, cost = None, np.zeros(0), None
    for round_index in range(ENTANGLEMENT_SETTINGS["cutting_plane_rounds"]):
        projectors = _projector_coordinates(_columns(atoms))
        count = projectors.shape[1]
        result = linprog(np.ones(2 * count), A_eq=np.hstack([projectors, -projectors]), b_eq=target,
                         bounds=(0, None), method="highs")
        if result.status != 0:
            logger.warning(f"Product-projector LP failed: {result.message}")
            break
        coefficients = result.x[:count] - result.x[count:]
        reconstruction = from_coordinates(projectors @ coefficients, dim)
        cost = float(np.sum(np.abs(coefficients))) + residual_penalty(rho.matrix - reconstruction, r)
        dual_matrix = from_coordinates(np.asarray(result.eqlin.marginals), dim)
        added = 0
        for sign in (1.0, -1.0):
            factors, value = maximize_expectation(sign * dual_matrix, dims, rng,
                                                  ENTANGLEMENT_SETTINGS["separation_restarts"])
            if value > 1.0 + 1e-9:
                atoms.append(factors)
                added += 1
        logger.debug(f"LP round {round_index}: cost {cost:.10f}, {count} atoms, {added} added")
        if not added:
            break
    return cost, dual_matrix, atoms, coefficients


# ==================== UPPER ENDPOINT: DECOMPOSITIONS ====================

def local_basis_cost(matrix: np.ndarray, dims: Sequence[int]) -> float:
    """
    Cost of the expansion over products of local orthonormal Hermitian bases.

    A = sum_a c_a G_a1 (x) ... (x) G_aN with c_a = trace(A G_a); the cost is
    sum_a |c_a| prod_k ||G_ak||_1.
    """
    dims = tuple(dims)
    n = len(dims)
    bases = []
    norms = []
    for d in dims:
        basis = np.stack([from_coordinates(np.eye(d * d)[a], d) for a in range(d * d)])
        bases.append(basis)
        norms.append(np.array([trace_norm(g) for g in basis]))
    letters = iter(string.ascii_letters)
    rows = [next(letters) for _ in range(n)]
    cols = [next(letters) for _ in range(n)]
    outs = [next(letters) for _ in range(n)]
    subscripts = "".join(rows + cols) + "," + ",".join(o + c + r for o, c, r in zip(outs, cols, rows)) + "->" + "".join(outs)
    coefficients = np.einsum(subscripts, np.asarray(matrix).reshape(dims + dims), *bases)
    weight = reduce(np.multiply.outer, norms)
    return float(np.sum(np.abs(coefficients) * weight))


def _unpack(parameters: np.ndarray, count: int, dims: Tuple[int, ...]) -> Tuple[np.ndarray, List[Factors]]:
    weights = parameters[:count] ** 2
    offset = count
    atoms = []
    for _ in range(count):
        factors = []
        for d in dims:
            vector = parameters[offset:offset + d] + 1j * parameters[offset + d:offset + 2 * d]
            offset += 2 * d
            factors.append(vector / max(np.linalg.norm(vector), 1e-300))
        atoms.append(factors)
    return weights, atoms


def _polish(atoms: List[Factors], weights: np.ndarray, target: np.ndarray,
            dims: Tuple[int, ...]) -> Tuple[List[Factors], np.ndarray]:
    """Least-squares refinement of weights (w = s^2) and factors jointly."""
    count = len(atoms)
    start = [np.sqrt(weights)]
    for factors in atoms:
        for f in factors:
            start.extend([np.real(f), np.imag(f)])
    x0 = np.concatenate(start)

    def residuals(parameters: np.ndarray) -> np.ndarray:
        w, polished = _unpack(parameters, count, dims)
        return _projector_coordinates(_columns(polished)) @ w - target

    result = least_squares(residuals, x0, method="trf", max_nfev=ENTANGLEMENT_SETTINGS["polish_max_evaluations"],
                           ftol=1e-15, xtol=1e-15, gtol=1e-15)
    w, polished = _unpack(result.x, count, dims)
    logger.debug(f"Polish: {result.nfev} evaluations, residual {np.linalg.norm(result.fun):.3g}")
    return polished, w


def _fit_weights(atoms: List[Factors], target: np.ndarray, dim: int) -> Tuple[np.ndarray, np.ndarray]:
    """Non-negative least squares over projector atoms; returns (weights, reconstruction)."""
    projectors = _projector_coordinates(_columns(atoms))
    weights, _ = nnls(projectors, target, maxiter=10 * projectors.shape[1])
    return weights, from_coordinates(projectors @ weights, dim)


def find_separable_decomposition(rho: DensityOperator, opts: Optional[SolverOptions] = None,
                                 seed_atoms: Sequence[Factors] = ()) -> Optional[SeparableDecomposition]:
    """
    Search for sum_k w_k |p_k><p_k| = A.

    Dictionary: tomographic products, seeded atoms and random products. Each
    round solves non-negative least squares and adds the product maximizing
    <p|R|p> for the residual R, started from the nearest product of R's
    dominant eigenvector. The support is finally polished by least squares.
    """
    opts = opts if opts is not None else SolverOptions()
    rng = np.random.default_rng(opts.seed)
    dims = rho.shape.dims
    dim = rho.shape.total_dim
    target = hermitian_coordinates(rho.matrix)
    atom_cap = SEPARABLE_ATOM_FACTOR * dim * dim
    atoms: List[Factors] = [list(f) for f in seed_atoms] + tomographic_products(dims, rng)
    atoms += [[random_unit_vector(d, rng) for d in dims] for _ in range(min(opts.restarts, 64))]
    atoms = atoms[:atom_cap]
    overlap_opts = opts.derived(restarts=ENTANGLEMENT_SETTINGS["separation_restarts"])

    for round_index in range(ENTANGLEMENT_SETTINGS["separable_rounds"]):
        weights, reconstruction = _fit_weights(atoms, target, dim)
        residual = rho.matrix - reconstruction
        distance = trace_norm(residual)
        if distance <= 1e-12:
            break
        _, vectors = np.linalg.eigh(hermitian_part(residual))
        seed_factors, _, _, _ = maximize_overlap(vectors[:, -1].reshape(dims), overlap_opts.with_seed_offset(round_index))
        factors, gain = maximize_expectation(residual, dims, rng, 2, starts=[seed_factors])
        logger.debug(f"Separable round {round_index}: residual {distance:.3g}, best gain {gain:.3g}")
        if gain <= 1e-14:
            break
        if len(atoms) >= atom_cap:
            support = [atoms[k] for k in np.flatnonzero(weights > 0)]
            if len(support) >= atom_cap:
                logger.warning(f"Separable search reached the atom cap {atom_cap}")
                break
            atoms = support
        atoms.append(factors)

    weights, _ = _fit_weights(atoms, target, dim)
    order = np.argsort(-weights)
    keep = [int(k) for k in order[:ENTANGLEMENT_SETTINGS["polish_max_atoms"]] if weights[k] > 1e-14]
    if not keep:
        return None
    support = [atoms[k] for k in keep]
    support_weights = weights[keep]
    residual = rho.matrix - from_coordinates(_projector_coordinates(_columns(support)) @ support_weights, dim)
    if trace_norm(residual) > 1e-12:
        support, support_weights = _polish(support, support_weights, target, dims)
    mask = support_weights > 1e-14
    support = [f for f, m in zip(support, mask) if m]
    support_weights = support_weights[mask]
    if not support:
        return None
    support_weights = support_weights / support_weights.sum()
    states = tuple(ProductVector.from_unnormalized(f) for f in support)
    decomposition = SeparableDecomposition(tuple(support_weights), states, 0.0)
    distance = trace_norm(rho.matrix - decomposition.reconstruct())
    logger.info(f"Separable decomposition with {len(states)} atoms, trace-norm residual {distance:.3g}")
    return SeparableDecomposition(decomposition.weights, decomposition.states, distance)


# ==================== ENTANGLEMENT FUNCTION ====================

@dataclass(frozen=True)
class EntanglementDetails:
    """Every candidate examined while bracketing E."""

    bracket: NormBracket
    witnesses: Tuple[WitnessCertificate, ...]
    upper_candidates: Tuple[Tuple[str, float], ...]
    separable: Optional[SeparableDecomposition]


def entanglement_details(rho: DensityOperator, opts: Optional[SolverOptions] = None,
                         search_separable: Optional[bool] = None) -> EntanglementDetails:
    """
    Bracket E with every candidate kept.

    `search_separable` forces (True) or skips (False) the separable search; by
    default it runs only when the witnesses and the LP point at a separable state.
    """
    opts = opts if opts is not None else SolverOptions()
    rng = np.random.default_rng(opts.seed)
    dims = rho.shape.dims
    dim = rho.shape.total_dim
    r = closed_form_inner_radius(rho.shape)

    witnesses: List[WitnessCertificate] = []
    sources: List[Tuple[np.ndarray, Optional[np.ndarray]]] = []
    uppers: List[Tuple[str, float]] = []
    if r is not None:
        uppers.append(("inner radius cap r^-2", 1.0 / r ** 2))

    def add_witness(operator: np.ndarray, label: str, vector: Optional[np.ndarray] = None, use_net: bool = False):
        witness = make_witness(rho, operator, label, use_net=use_net, vector=vector)
        if witness is not None:
            witnesses.append(witness)
            sources.append((operator, vector))

    add_witness(np.eye(dim), "identity")
    add_witness(rho.matrix, "state itself")

    # Negligible eigenvalues are charged at the largest possible (||psi||^V)^2
    eigenvalues, eigenvectors = np.linalg.eigh(hermitian_part(rho.matrix))
    largest_square = math.prod(sorted(dims)[:-1])
    # A pure state gets at least the squared projective lower endpoint from its dual
    rank_one = int(np.count_nonzero(np.abs(eigenvalues) > 1e-10)) == 1
    spectral_cost = 0.0
    witnessed = 0
    for index in np.argsort(-np.abs(eigenvalues)):
        weight = abs(float(eigenvalues[index]))
        if weight <= 1e-10:
            spectral_cost += weight * largest_square
            continue
        vector = eigenvectors[:, index]
        projective = vector_projective_norm(vector, dims, opts)
        spectral_cost += weight * projective.upper ** 2
        if witnessed < ENTANGLEMENT_SETTINGS["witness_eigenvectors"]:
            witnessed += 1
            add_witness(np.outer(vector, vector.conj()), f"eigenvector {index}", vector)
            dual = projective.lower_certificate
            if dual is not None:
                add_witness(np.outer(dual, np.conj(dual)), f"eigenvector {index} projective dual", dual,
                            use_net=rank_one)
    uppers.append(("spectral bound sum |lambda_i| (||psi_i||^V)^2", spectral_cost))

    uppers.append(("local Hermitian basis expansion", local_basis_cost(rho.matrix, dims)))

    lp_cost = None
    seed_atoms: List[Factors] = []
    if dim <= ENTANGLEMENT_SETTINGS["lp_max_dim"]:
        lp_cost, dual, atoms, coefficients = _signed_projector_lp(rho, tomographic_products(dims, rng), rng, r)
        if lp_cost is not None:
            uppers.append(("signed product-projector LP", lp_cost))
            add_witness(dual, "product-projector LP dual")
            seed_atoms = [atoms[k] for k in np.flatnonzero(coefficients > 1e-12)]

    # Spectral normalization first; the covering net only for the leading witnesses
    leading = sorted(range(len(witnesses)), key=lambda k: (-witnesses[k].value, k))
    for k in leading[:ENTANGLEMENT_SETTINGS["net_witnesses"]]:
        operator, vector = sources[k]
        tightened = make_witness(rho, operator, witnesses[k].label, vector=vector)
        if tightened is not None and tightened.value > witnesses[k].value:
            witnesses[k] = tightened

    best_witness = max(witnesses, key=lambda w: w.value)
    gap = ENTANGLEMENT_SETTINGS["candidate_separable_gap"]
    candidate = best_witness.value <= 1.0 + ENTANGLEMENT_SETTINGS["classify_tolerance"] or (
        lp_cost is not None and lp_cost <= 1.0 + gap)
    separable = None
    if search_separable or (search_separable is None and candidate):
        separable = find_separable_decomposition(rho, opts, seed_atoms)
        if separable is not None:
            penalty = residual_penalty(rho.matrix - separable.reconstruct(), r)
            uppers.append(("separable decomposition", 1.0 + penalty))

    label, upper = min(uppers, key=lambda item: item[1])
    logger.info(f"E bracket on {rho.shape}: [{best_witness.value:.10f}, {upper:.10f}] "
                f"(witness '{best_witness.label}', upper '{label}')")
    bracket = NormBracket.ordered(best_witness.value, upper, lower_certificate=best_witness,
                                  upper_certificate=label, upper_decomposition=separable)
    return EntanglementDetails(bracket, tuple(witnesses), tuple(uppers), separable)


def entanglement(rho: DensityOperator, opts: Optional[SolverOptions] = None,
                 search_separable: Optional[bool] = None) -> NormBracket:
    """
    Certified bracket for E(rho) = sup over ||X||_V <= 1 of |trace(A X)|.

    Lower endpoint: best witness, each normalized by the certified V-norm upper
    bound. Upper endpoint: cheapest decomposition cost found, residuals charged.
    """
    return entanglement_details(rho, opts, search_separable).bracket


def pure_state_entanglement(state: PureState, opts: Optional[SolverOptions] = None) -> NormBracket:
    """E of a vector state is the squared projective norm."""
    projective = vector_projective_norm(state.amplitudes, state.dims, opts)
    return NormBracket.ordered(projective.lower ** 2, projective.upper ** 2,
                               lower_certificate=projective.lower_certificate,
                               upper_certificate=f"squared projective bracket ({projective.upper_certificate})",
                               upper_decomposition=projective.upper_decomposition)


# ==================== VERDICTS ====================

@dataclass(frozen=True)
class Classification:
    verdict: str
    bracket: NormBracket
    witness: Optional[WitnessCertificate] = None
    decomposition: Optional[SeparableDecomposition] = None


def classify(rho: DensityOperator, opts: Optional[SolverOptions] = None,
             tol: float = ENTANGLEMENT_SETTINGS["classify_tolerance"]) -> Classification:
    """
    separable / entangled / maximally-entangled / undecided.

    maximally-entangled needs a closed-form inner radius and a lower endpoint
    within tol of r^-2; entangled needs a witness above 1 + tol; separable needs
    a decomposition with trace-norm residual <= tol.
    """
    details = entanglement_details(rho, opts)
    bracket = details.bracket
    witness = bracket.lower_certificate
    r = closed_form_inner_radius(rho.shape)
    if r is not None and bracket.lower >= 1.0 / r ** 2 - tol:
        return Classification(VERDICT_MAXIMALLY_ENTANGLED, bracket, witness=witness)
    if bracket.lower > 1.0 + tol:
        return Classification(VERDICT_ENTANGLED, bracket, witness=witness)
    decomposition = details.separable or find_separable_decomposition(rho, opts)
    if decomposition is not None and decomposition.residual <= tol:
        return Classification(VERDICT_SEPARABLE, bracket, decomposition=decomposition)
    logger.warning(f"Classification undecided on {rho.shape}: E in [{bracket.lower:.8f}, {bracket.upper:.8f}]")
    return Classification(VERDICT_UNDECIDED, bracket, witness=witness, decomposition=decomposition)


@dataclass(frozen=True)
class LipschitzReport:
    """|E(rho) - E(sigma)| against r^-2 ||rho - sigma||_1."""

    rho_bracket: NormBracket
    sigma_bracket: NormBracket
    distance: float
    bound: float

    @property
    def midpoint_gap(self) -> float:
        return abs(self.rho_bracket.midpoint - self.sigma_bracket.midpoint)

    @property
    def certified_gap(self) -> float:
        return max(0.0, self.rho_bracket.lower - self.sigma_bracket.upper,
                   self.sigma_bracket.lower - self.rho_bracket.upper)

    @property
    def widest_gap(self) -> float:
        return max(self.rho_bracket.upper - self.sigma_bracket.lower,
                   self.sigma_bracket.upper - self.rho_bracket.lower)

    @property
    def violation(self) -> bool:
        return self.certified_gap > self.bound + 1e-6


def lipschitz_from_brackets(rho: DensityOperator, sigma: DensityOperator,
                            rho_bracket: NormBracket, sigma_bracket: NormBracket) -> LipschitzReport:
    r = closed_form_inner_radius(rho.shape)
    if r is None:
        raise UnsupportedShapeError(f"shape {rho.shape} has no closed-form inner radius (needs n_N >= n_1...n_(N-1))")
    distance = trace_norm(rho.matrix - sigma.matrix)
    return LipschitzReport(rho_bracket, sigma_bracket, distance, distance / r ** 2)


def lipschitz_check(rho: DensityOperator, sigma: DensityOperator,
                    opts: Optional[SolverOptions] = None) -> LipschitzReport:
    """Continuity check of E; flags a violation only when the certified gap exceeds the bound."""
    report = lipschitz_from_brackets(rho, sigma, entanglement(rho, opts), entanglement(sigma, opts))
    if report.violation:
        logger.warning(f"Lipschitz violation: certified gap {report.certified_gap:.8f} > bound {report.bound:.8f}")
    return report


@dataclass(frozen=True)
class MixtureReport:
    bracket: NormBracket
    target: float
    component_maximal: Tuple[bool, ...]
    tolerance: float

    @property
    def all_components_maximal(self) -> bool:
        return all(self.component_maximal)

    @property
    def reaches_maximum(self) -> bool:
        return self.bracket.lower >= self.target - self.tolerance

    @property
    def certified_not_maximal(self) -> bool:
        return self.bracket.upper < self.target - self.tolerance

    @property
    def consistent(self) -> bool:
        return not self.reaches_maximum or self.all_components_maximal


def mixture_component_check(weights: Sequence[float], components: Sequence[PureState],
                            opts: Optional[SolverOptions] = None, tol: float = 1e-6) -> MixtureReport:
    """
    E of sum_k w_k |xi_k><xi_k| against per-component maximality.

    A mixture reaching r^-2 must consist of maximal vectors. The upper endpoint
    also uses convexity: E(rho) <= sum_k w_k (||xi_k||^V)^2.
    """
    if len(weights) != len(components) or not components:
        raise InvariantError("one weight per component is required")
    shape = components[0].shape
    r = closed_form_inner_radius(shape)
    if r is None:
        raise UnsupportedShapeError(f"shape {shape} has no closed-form inner radius (needs n_N >= n_1...n_(N-1))")
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-8:
        raise InvariantError("mixture weights must be non-negative and sum to 1")
    matrix = sum(w * pure_density(c).matrix for w, c in zip(weights, components))
    rho = DensityOperator(shape, matrix)
    bracket = entanglement(rho, opts)
    convex = sum(w * vector_projective_norm(c.amplitudes, c.dims, opts).upper ** 2
                 for w, c in zip(weights, components))
    if convex < bracket.upper:
        bracket = NormBracket.ordered(bracket.lower, convex, lower_certificate=bracket.lower_certificate,
                                      upper_certificate="convexity over the given components")
    verdicts = tuple(is_maximal(c, opts, tol, evidence=False).is_maximal for c in components)
    report = MixtureReport(bracket, 1.0 / r ** 2, verdicts, tol)
    if not report.consistent:
        logger.warning("Mixture reaches r^-2 although a component is not maximal")
    return report
