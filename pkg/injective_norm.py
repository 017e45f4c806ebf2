# ==================== IMPORTS ====================
# Numerics
import math
import numpy as np
from dataclasses import dataclass, field, replace
from typing import Any, List, Optional, Sequence, Tuple, Union

# Logging
import logging

# Local modules
from constants import MAX_BIPARTITION_SLOTS, MAX_OPERATOR_DIM, NET_SETTINGS, SOLVER_DEFAULTS, TOLERANCES
from tensor_core import (
    HermitianOperator,
    ProductVector,
    PureState,
    SpaceShape,
    bipartition_matrix,
    bipartitions,
    random_unit_vector,
)
from utils import BoundsError, InvariantError, ShapeError

logger = logging.getLogger(__name__)


# ==================== CONFIGURATION TYPES ====================

@dataclass(frozen=True)
class SolverOptions:
    """Per-call solver configuration; defaults come from SOLVER_DEFAULTS."""

    restarts: int = SOLVER_DEFAULTS["restarts"]
    max_iterations: int = SOLVER_DEFAULTS["max_iterations"]
    tolerance: float = SOLVER_DEFAULTS["tolerance"]
    seed: int = SOLVER_DEFAULTS["seed"]

    def __post_init__(self):
        if self.restarts < 1:
            raise InvariantError(f"restarts must be >= 1, got {self.restarts}")
        if self.max_iterations < 1:
            raise InvariantError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not self.tolerance > 0:
            raise InvariantError(f"tolerance must be > 0, got {self.tolerance}")
        if self.seed < 0:
            raise BoundsError(f"seed must be >= 0, got {self.seed}")

    def derived(self, **changes) -> "SolverOptions":
        return replace(self, **changes)

    def with_seed_offset(self, offset: int) -> "SolverOptions":
        return replace(self, seed=self.seed + offset)


@dataclass(frozen=True)
class NormBracket:
    """Certified interval [lower, upper] for a norm value."""

    lower: float
    upper: float
    lower_certificate: Optional[Any] = None
    upper_certificate: str = ""
    iterations: int = 0
    restarts_used: int = 0
    upper_decomposition: Optional[Any] = field(default=None, repr=False)

    def __post_init__(self):
        lower, upper = float(self.lower), float(self.upper)
        if not (math.isfinite(lower) and math.isfinite(upper)):
            raise InvariantError(f"bracket endpoints must be finite, got [{lower}, {upper}]")
        if lower < 0 or upper < 0:
            raise InvariantError(f"bracket endpoints must be >= 0, got [{lower}, {upper}]")
        if lower > upper + TOLERANCES["bracket_order"]:
            raise InvariantError(f"bracket out of order: [{lower!r}, {upper!r}]")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def ordered(cls, lower: float, upper: float, **kwargs) -> "NormBracket":
        """Build a bracket, lifting the upper endpoint over round-off crossings.

        A crossing larger than the relative `bracket_crossing` tolerance means
        one of the bounds is unsound and raises InvariantError.
        """
        lower = max(0.0, float(lower))
        upper = max(0.0, float(upper))
        if lower > upper:
            if lower - upper > TOLERANCES["bracket_crossing"] * max(1.0, lower):
                raise InvariantError(f"bounds cross: lower {lower!r} exceeds upper {upper!r}")
            logger.debug(f"Lifting upper endpoint {upper!r} to lower endpoint {lower!r}")
            upper = lower
        return cls(lower, upper, **kwargs)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return (self.lower + self.upper) / 2

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol


def _default_options(opts: Optional[SolverOptions]) -> SolverOptions:
    return opts if opts is not None else SolverOptions()


# ==================== CONTRACTIONS ====================

def contract_except(tensor: np.ndarray, factors: Sequence[np.ndarray], skip: int) -> np.ndarray:
    """Contract every slot but `skip` against conj(factor); highest slot first keeps axis numbers valid."""
    result = tensor
    for slot in reversed(range(tensor.ndim)):
        if slot == skip:
            continue
        result = np.tensordot(result, np.conj(factors[slot]), axes=([slot], [0]))
    return result


def product_overlap(tensor: np.ndarray, factors: Sequence[np.ndarray]) -> complex:
    """<xi, a_1 (x) ... (x) a_N>."""
    result = tensor
    for slot in reversed(range(tensor.ndim)):
        result = np.tensordot(result, np.conj(factors[slot]), axes=([slot], [0]))
    return complex(result)


def _structured_start(tensor: np.ndarray) -> List[np.ndarray]:
    """Leading left singular vector of every mode unfolding."""
    factors = []
    for slot in range(tensor.ndim):
        unfolding = np.moveaxis(tensor, slot, 0).reshape(tensor.shape[slot], -1)
        u, _, _ = np.linalg.svd(unfolding, full_matrices=False)
        factors.append(u[:, 0].copy())
    return factors


def _alternating_sweeps(tensor: np.ndarray, factors: List[np.ndarray],
                        max_iterations: int, tolerance: float) -> Tuple[List[np.ndarray], float, int]:
    value = 0.0
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        previous = value
        for slot in range(tensor.ndim):
            contraction = contract_except(tensor, factors, slot)
            norm = float(np.linalg.norm(contraction))
            if norm == 0.0:
                value = 0.0
                continue
            factors[slot] = contraction / norm
            value = norm
        if value - previous < tolerance:
            break
    return factors, value, iterations


def maximize_overlap(tensor: np.ndarray, opts: SolverOptions,
                     warm_starts: Sequence[Sequence[np.ndarray]] = ()) -> Tuple[List[np.ndarray], float, int, int]:
    """
    Multi-start alternating maximization of |<xi, a_1 (x) ... (x) a_N>|.

    Restart 0 starts from the mode-unfolding singular vectors, restart r >= 1
    from random factors seeded with opts.seed + r. Warm starts run first.

    Returns:
        Tuple of (best factors, best value, total sweeps, restarts run)
    """
    best_factors: List[np.ndarray] = []
    best_value = -1.0
    total_iterations = 0
    starts: List[List[np.ndarray]] = [list(np.asarray(f, dtype=complex) for f in w) for w in warm_starts]
    for restart in range(opts.restarts):
        if restart == 0:
            starts.append(_structured_start(tensor))
        else:
            rng = np.random.default_rng(opts.seed + restart)
            starts.append([random_unit_vector(d, rng) for d in tensor.shape])
    for index, start in enumerate(starts):
        factors, value, iterations = _alternating_sweeps(tensor, start, opts.max_iterations, opts.tolerance)
        total_iterations += iterations
        logger.debug(f"Restart {index}: overlap {value:.12f} after {iterations} sweeps")
        if value > best_value:
            best_factors, best_value = factors, value
    # Re-evaluate so the certificate reproduces the value exactly
    best_factors = [f / np.linalg.norm(f) for f in best_factors]
    best_value = abs(product_overlap(tensor, best_factors))
    return best_factors, best_value, total_iterations, len(starts)


# ==================== CERTIFIED UPPER BOUNDS ====================

def _slot_bipartitions(num_slots: int) -> List[Tuple[int, ...]]:
    return bipartitions(num_slots, contiguous_only=num_slots > MAX_BIPARTITION_SLOTS)


def spectral_upper(tensor: np.ndarray) -> Tuple[float, str]:
    """Minimum over bipartitions of the grouped largest singular value."""
    dims = tensor.shape
    vector = tensor.reshape(-1)
    best, best_split = math.inf, ()
    for left in _slot_bipartitions(len(dims)):
        sigma = float(np.linalg.svd(bipartition_matrix(vector, dims, left), compute_uv=False)[0])
        if sigma < best:
            best, best_split = sigma, left
    right = tuple(k for k in range(len(dims)) if k not in best_split)
    description = "bipartition sigma_max over slots " + _format_split(best_split, right)
    return best, description


def _format_split(left: Sequence[int], right: Sequence[int]) -> str:
    return "{" + ",".join(str(k + 1) for k in left) + "}|{" + ",".join(str(k + 1) for k in right) + "}"


def _bloch_net(polar_steps: int, azimuth_steps: int) -> Tuple[np.ndarray, float]:
    """
    Deterministic qubit grid and its covering overlap.

    Every unit vector a in C^2 has a grid point b with |<a,b>| >= cos(rho / 2),
    where rho = pi / (2 * polar_steps) + pi / azimuth_steps bounds the Bloch angle.
    """
    points = [np.array([1.0, 0.0], dtype=complex), np.array([0.0, 1.0], dtype=complex)]
    for j in range(1, polar_steps):
        t = j * np.pi / polar_steps
        for l in range(azimuth_steps):
            phi = 2 * np.pi * l / azimuth_steps
            points.append(np.array([np.cos(t / 2), np.exp(1j * phi) * np.sin(t / 2)]))
    rho = np.pi / (2 * polar_steps) + np.pi / azimuth_steps
    return np.array(points), float(np.cos(rho / 2))


def _batched_spectral(blocks: np.ndarray, dims: Tuple[int, ...]) -> np.ndarray:
    """Per-point spectral upper bound of the remainder tensors."""
    count = blocks.shape[0]
    if len(dims) == 1:
        return np.linalg.norm(blocks.reshape(count, -1), axis=1)
    best = np.full(count, np.inf)
    tensors = blocks.reshape((count,) + dims)
    for left in _slot_bipartitions(len(dims)):
        right = [k for k in range(len(dims)) if k not in left]
        order = [0] + [k + 1 for k in left] + [k + 1 for k in right]
        rows = math.prod(dims[k] for k in left)
        matrices = tensors.transpose(order).reshape(count, rows, -1)
        best = np.minimum(best, np.linalg.svd(matrices, compute_uv=False)[:, 0])
    return best


def net_upper(tensor: np.ndarray, slot: int, polar_steps: int, azimuth_steps: int,
              chunk: int = 4096) -> float:
    """Certified upper bound from a covering net over a qubit slot."""
    points, cover = _bloch_net(polar_steps, azimuth_steps)
    rest = tuple(d for k, d in enumerate(tensor.shape) if k != slot)
    best = 0.0
    for start in range(0, len(points), chunk):
        batch = points[start:start + chunk]
        blocks = np.tensordot(np.conj(batch), tensor, axes=([1], [slot]))
        best = max(best, float(np.max(_batched_spectral(blocks, rest))))
    return best / cover


def certified_upper(tensor: np.ndarray, lower: float = 0.0, use_net: bool = True,
                    polar_steps: int = NET_SETTINGS["polar_steps"],
                    azimuth_steps: int = NET_SETTINGS["azimuth_steps"]) -> Tuple[float, str]:
    """
    Certified upper bound on the injective norm of an arbitrary tensor.

    Args:
        tensor: Complex tensor of any norm
        lower: Known lower bound; the net is skipped once the spectral bound meets it
        use_net: Allow the qubit covering net
        polar_steps: Net rings
        azimuth_steps: Net points per ring

    Returns:
        Tuple of (bound, description)
    """
    upper, description = spectral_upper(tensor)
    if not use_net or tensor.ndim < 3 or upper - lower <= TOLERANCES["net_skip"]:
        return upper, description
    qubit_slots = [k for k, d in enumerate(tensor.shape) if d == 2]
    remainder = tensor.size // 2
    if not qubit_slots or remainder > NET_SETTINGS["max_remainder_dim"]:
        return upper, description
    for slot in qubit_slots[:3]:
        if upper - lower <= TOLERANCES["net_skip"]:
            break
        bound = net_upper(tensor, slot, polar_steps, azimuth_steps)
        logger.debug(f"Covering net on slot {slot + 1}: {bound:.12f} (spectral {upper:.12f})")
        if bound < upper:
            upper = bound
            description = f"covering net over slot {slot + 1} ({polar_steps}x{azimuth_steps} Bloch grid)"
    return upper, description


# ==================== VECTOR NORM ====================

def vector_injective_norm(vector: np.ndarray, dims: Sequence[int],
                          opts: Optional[SolverOptions] = None, certify: bool = True) -> NormBracket:
    """
    Injective norm bracket of a vector of any nonzero norm.

    The bracket scales homogeneously; its ProductVector certificate satisfies
    |<vector, expand_product(p)>| = lower.
    """
    opts = _default_options(opts)
    vector = np.asarray(vector, dtype=complex).reshape(-1)
    dims = tuple(int(d) for d in dims)
    if vector.size != math.prod(dims):
        raise ShapeError(f"vector of length {vector.size} does not fit dims {dims}")
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise InvariantError("the injective norm is only probed on nonzero vectors")
    tensor = (vector / norm).reshape(dims)

    if len(dims) == 2:
        u, s, vh = np.linalg.svd(tensor)
        product = ProductVector((u[:, 0], vh[0]))
        value = float(abs(product_overlap(tensor, product.factors)))
        value = max(value, float(s[0]))
        return NormBracket.ordered(value * norm, value * norm, lower_certificate=product,
                                   upper_certificate="exact: sigma_max of the bipartite matrix")

    factors, lower, iterations, restarts = maximize_overlap(tensor, opts)
    upper, description = certified_upper(tensor, lower, use_net=certify)
    logger.debug(f"Injective bracket for dims {dims}: [{lower:.12f}, {upper:.12f}] via {description}")
    return NormBracket.ordered(lower * norm, upper * norm,
                               lower_certificate=ProductVector(tuple(factors)),
                               upper_certificate=description,
                               iterations=iterations, restarts_used=restarts)


def injective_upper(vector: np.ndarray, dims: Sequence[int], use_net: bool = True, lower: float = 0.0) -> float:
    """Certified upper endpoint only (no alternating maximization); `lower` is a known value of the same vector."""
    vector = np.asarray(vector, dtype=complex).reshape(-1)
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        return 0.0
    tensor = (vector / norm).reshape(tuple(dims))
    if tensor.ndim == 2:
        return float(np.linalg.svd(tensor, compute_uv=False)[0]) * norm
    upper, _ = certified_upper(tensor, lower / norm, use_net=use_net)
    return upper * norm


def injective_norm(state: PureState, opts: Optional[SolverOptions] = None) -> NormBracket:
    """Certified bracket for ||xi||_V = sup over product unit vectors of |<xi, eta>|."""
    return vector_injective_norm(state.amplitudes, state.dims, opts)


def nearest_product(state: PureState, opts: Optional[SolverOptions] = None) -> Tuple[ProductVector, float]:
    """Product vector attaining the lower endpoint of injective_norm, with its overlap."""
    bracket = injective_norm(state, opts)
    return bracket.lower_certificate, bracket.lower


def distance_to_V(state: PureState, opts: Optional[SolverOptions] = None) -> NormBracket:
    """d(xi, V) = sqrt(2 - 2 ||xi||_V); the decreasing map swaps endpoints."""
    bracket = injective_norm(state, opts)
    lower = math.sqrt(max(0.0, 2.0 - 2.0 * bracket.upper))
    upper = math.sqrt(max(0.0, 2.0 - 2.0 * bracket.lower))
    return NormBracket.ordered(lower, upper, lower_certificate=bracket.lower_certificate,
                               upper_certificate=f"sqrt(2 - 2 t) of the injective bracket ({bracket.upper_certificate})",
                               iterations=bracket.iterations, restarts_used=bracket.restarts_used)


def geometric_measure(state: PureState, opts: Optional[SolverOptions] = None) -> NormBracket:
    """Bracket for 1 - ||xi||_V^2."""
    bracket = injective_norm(state, opts)
    return NormBracket.ordered(max(0.0, 1.0 - bracket.upper ** 2), max(0.0, 1.0 - bracket.lower ** 2),
                               lower_certificate=bracket.lower_certificate,
                               upper_certificate=f"1 - t^2 of the injective bracket ({bracket.upper_certificate})",
                               iterations=bracket.iterations, restarts_used=bracket.restarts_used)


# ==================== OPERATOR NORM ====================

def _operator_tensor(operator: Union[HermitianOperator, np.ndarray],
                     shape: Optional[SpaceShape]) -> Tuple[np.ndarray, Tuple[int, ...]]:
    if isinstance(operator, HermitianOperator):
        shape = shape or operator.shape
        matrix = operator.matrix
    else:
        matrix = np.asarray(operator, dtype=complex)
        if shape is None:
            raise ShapeError("a shape is required for a bare operator matrix")
    size = shape.total_dim
    if matrix.shape != (size, size):
        raise ShapeError(f"operator of shape {matrix.shape} does not act on {shape} (dimension {size})")
    if size > MAX_OPERATOR_DIM:
        raise ShapeError(f"operator dimension {size} exceeds the cap {MAX_OPERATOR_DIM}")
    dims = shape.dims
    return matrix.reshape(dims + dims), dims


def operator_injective_norm(operator: Union[HermitianOperator, np.ndarray],
                            opts: Optional[SolverOptions] = None,
                            shape: Optional[SpaceShape] = None) -> NormBracket:
    """
    Bracket for ||X||_V = sup over product unit xi, eta of |<X xi, eta>|.

    vec(X) is read as a 2N-slot tensor (rows then columns); its injective norm is
    ||X||_V, and the rows|columns bipartition reproduces the operator norm. The
    lower certificate is the pair (xi, eta) of ProductVectors.
    """
    opts = _default_options(opts)
    tensor, dims = _operator_tensor(operator, shape)
    norm = float(np.linalg.norm(tensor))
    if norm == 0.0:
        return NormBracket(0.0, 0.0, upper_certificate="zero operator")
    unit = tensor / norm
    factors, lower, iterations, restarts = maximize_overlap(unit, opts)
    upper, description = certified_upper(unit, lower,
                                         polar_steps=NET_SETTINGS["operator_polar_steps"],
                                         azimuth_steps=NET_SETTINGS["operator_azimuth_steps"])
    n = len(dims)
    eta = ProductVector(tuple(factors[:n]))
    xi = ProductVector(tuple(np.conj(f) for f in factors[n:]))
    return NormBracket.ordered(lower * norm, upper * norm, lower_certificate=(xi, eta),
                               upper_certificate=description,
                               iterations=iterations, restarts_used=restarts)


def operator_injective_upper(operator: Union[HermitianOperator, np.ndarray],
                             shape: Optional[SpaceShape] = None, use_net: bool = True,
                             lower: float = 0.0) -> float:
    """Certified upper bound on ||X||_V without running the maximization.

    The covering net is skipped once the spectral bound meets `lower`.
    """
    tensor, _ = _operator_tensor(operator, shape)
    norm = float(np.linalg.norm(tensor))
    if norm == 0.0:
        return 0.0
    upper, _ = certified_upper(tensor / norm, lower / norm, use_net=use_net,
                               polar_steps=NET_SETTINGS["operator_polar_steps"],
                               azimuth_steps=NET_SETTINGS["operator_azimuth_steps"])
    return upper * norm
