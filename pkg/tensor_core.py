# ==================== IMPORTS ====================
# Numerics
import math
import numpy as np
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, List, Optional, Sequence, Tuple, Union

# Logging
import logging

# Local modules
from constants import MAX_TOTAL_DIM, TOLERANCES
from utils import (
    BoundsError,
    InvariantError,
    ShapeError,
    check_density,
    check_hermitian,
    check_unit_norm,
)

logger = logging.getLogger(__name__)

# ==================== MODULE DESCRIPTION ====================
"""
Dense complex tensor arithmetic over multipartite spaces H_1 (x) ... (x) H_N.

Amplitudes are flattened with slot 1 slowest and slot N fastest (numpy C order),
so reshaping a flat vector to `shape.dims` gives the tensor view directly.
All value types are frozen and hold read-only arrays.
"""


def _frozen(array: np.ndarray) -> np.ndarray:
    """Copy to complex128 and mark read-only."""
    result = np.array(array, dtype=complex, copy=True)
    result.setflags(write=False)
    return result


# ==================== DOMAIN TYPES ====================

@dataclass(frozen=True)
class SpaceShape:
    """Ordered factor dimensions (n_1, ..., n_N)."""

    dims: Tuple[int, ...]
    reduced: bool = field(default=False, compare=False, repr=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        min_slots = 1 if self.reduced else 2
        if len(dims) < min_slots:
            raise ShapeError(f"a tensor product needs at least {min_slots} slots, got {dims}")
        if any(d < 1 for d in dims):
            raise ShapeError(f"all dimensions must be >= 1, got {dims}")
        total = math.prod(dims)
        if total > MAX_TOTAL_DIM:
            raise ShapeError(f"total dimension {total} exceeds the dense cap {MAX_TOTAL_DIM}")

    @property
    def num_slots(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    @property
    def left_dim(self) -> int:
        """n_1 * ... * n_{N-1}."""
        return math.prod(self.dims[:-1])

    def normalized(self) -> "SpaceShape":
        """Dims sorted ascending (n_1 <= ... <= n_N)."""
        return SpaceShape(tuple(sorted(self.dims)), reduced=self.reduced)

    def coarsened(self) -> "SpaceShape":
        """Group the first N-1 slots: (n_1...n_{N-1}, n_N)."""
        return SpaceShape((self.left_dim, self.dims[-1]))

    def __str__(self) -> str:
        return "(" + ",".join(str(d) for d in self.dims) + ")"


@dataclass(frozen=True)
class PureState:
    """Unit amplitude vector over a SpaceShape."""

    shape: SpaceShape
    amplitudes: np.ndarray
    tolerance: float = field(default=TOLERANCES["unit_norm"], compare=False, repr=False)

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amplitudes.size != self.shape.total_dim:
            raise ShapeError(
                f"expected {self.shape.total_dim} amplitudes for shape {self.shape}, got {amplitudes.size}"
            )
        check_unit_norm(amplitudes, self.tolerance, what="state")
        object.__setattr__(self, "amplitudes", _frozen(amplitudes))

    @property
    def dims(self) -> Tuple[int, ...]:
        return self.shape.dims

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.shape.dims)

    def inner(self, other: "PureState") -> complex:
        """<self, other>, linear in the first argument."""
        return complex(np.vdot(other.amplitudes, self.amplitudes))

    def with_shape(self, shape: SpaceShape) -> "PureState":
        """Reinterpret the same amplitudes under another shape of equal total dimension."""
        return PureState(shape, self.amplitudes, self.tolerance)


@dataclass(frozen=True)
class ProductVector:
    """Decomposable unit vector a_1 (x) ... (x) a_N, stored factor-wise (phases not canonicalized)."""

    factors: Tuple[np.ndarray, ...]

    def __post_init__(self):
        factors = tuple(np.asarray(f, dtype=complex).reshape(-1) for f in self.factors)
        if len(factors) < 1:
            raise ShapeError("a product vector needs at least one factor")
        for k, factor in enumerate(factors):
            check_unit_norm(factor, TOLERANCES["unit_norm"], what=f"factor {k}")
        object.__setattr__(self, "factors", tuple(_frozen(f) for f in factors))

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(f.size for f in self.factors)

    def vector(self) -> np.ndarray:
        return reduce(np.kron, self.factors)

    def overlap(self, other: "ProductVector") -> complex:
        """<self, other> computed factor-wise."""
        if self.dims != other.dims:
            raise ShapeError(f"factor dimensions differ: {self.dims} vs {other.dims}")
        return complex(np.prod([np.vdot(b, a) for a, b in zip(self.factors, other.factors)]))

    def same_up_to_phase(self, other: "ProductVector", tol: float = 1e-8) -> bool:
        return abs(abs(self.overlap(other)) - 1.0) <= tol

    @staticmethod
    def from_unnormalized(factors: Iterable[np.ndarray]) -> "ProductVector":
        return ProductVector(tuple(np.asarray(f, dtype=complex) / np.linalg.norm(f) for f in factors))


@dataclass(frozen=True)
class DensityOperator:
    """Positive unit-trace operator A with rho(X) = trace(A X)."""

    shape: SpaceShape
    matrix: np.ndarray
    tolerance: float = field(default=TOLERANCES["trace"], compare=False, repr=False)

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        size = self.shape.total_dim
        if matrix.shape != (size, size):
            raise ShapeError(f"expected a {size}x{size} matrix for shape {self.shape}, got {matrix.shape}")
        check_density(matrix, self.tolerance)
        object.__setattr__(self, "matrix", _frozen(matrix))

    def expectation(self, operator: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ operator))


@dataclass(frozen=True)
class HermitianOperator:
    """Self-adjoint test operator X on a SpaceShape."""

    shape: SpaceShape
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        size = self.shape.total_dim
        if matrix.shape != (size, size):
            raise ShapeError(f"expected a {size}x{size} matrix for shape {self.shape}, got {matrix.shape}")
        check_hermitian(matrix)
        object.__setattr__(self, "matrix", _frozen(matrix))

    @property
    def operator_norm(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.matrix))))


# ==================== INDEXING ====================

def flatten_index(shape: SpaceShape, multi_index: Sequence[int]) -> int:
    """Row-major flat index ((i_1 n_2 + i_2) n_3 + ...) n_N + i_N."""
    if len(multi_index) != shape.num_slots:
        raise BoundsError(f"expected {shape.num_slots} indices, got {len(multi_index)}")
    flat = 0
    for slot, (index, dim) in enumerate(zip(multi_index, shape.dims)):
        if not 0 <= index < dim:
            raise BoundsError(f"index {index} out of range for slot {slot + 1} of dimension {dim}")
        flat = flat * dim + int(index)
    return flat


def unflatten_index(shape: SpaceShape, flat: int) -> Tuple[int, ...]:
    """Inverse of flatten_index."""
    if not 0 <= flat < shape.total_dim:
        raise BoundsError(f"flat index {flat} out of range [0, {shape.total_dim})")
    indices = []
    for dim in reversed(shape.dims):
        flat, index = divmod(flat, dim)
        indices.append(index)
    return tuple(reversed(indices))


# ==================== PRODUCTS AND MATRICIZATION ====================

def expand_product(product: ProductVector, shape: Optional[SpaceShape] = None) -> PureState:
    """Expand a_1 (x) ... (x) a_N into a flat PureState."""
    if shape is None:
        shape = SpaceShape(product.dims)
    elif product.dims != shape.dims:
        raise ShapeError(f"factor dimensions {product.dims} do not match shape {shape}")
    return PureState(shape, product.vector())


def matricize_array(vector: np.ndarray, dims: Sequence[int], split: int) -> np.ndarray:
    """Rows: first `split` slots; columns: remaining slots."""
    if not 1 <= split <= len(dims) - 1:
        raise BoundsError(f"split must lie in [1, {len(dims) - 1}], got {split}")
    rows = math.prod(dims[:split])
    return np.asarray(vector).reshape(rows, -1)


def matricize(state: PureState, split: int) -> np.ndarray:
    """(n_1...n_k) x (n_{k+1}...n_N) matrix of a state; Frobenius norm equals ||state||."""
    return matricize_array(state.amplitudes, state.dims, split)


def bipartition_matrix(vector: np.ndarray, dims: Sequence[int], left_slots: Sequence[int]) -> np.ndarray:
    """Matrix of a vector with rows indexed by `left_slots` and columns by the others."""
    left = list(left_slots)
    right = [k for k in range(len(dims)) if k not in left]
    tensor = np.asarray(vector).reshape(dims)
    rows = math.prod(dims[k] for k in left)
    return tensor.transpose(left + right).reshape(rows, -1)


def bipartitions(num_slots: int, contiguous_only: bool = False) -> List[Tuple[int, ...]]:
    """Nontrivial bipartitions, each given by the side containing slot 0."""
    if contiguous_only:
        return [tuple(range(k)) for k in range(1, num_slots)]
    result = []
    for mask in range(1 << (num_slots - 1)):
        left = (0,) + tuple(k + 1 for k in range(num_slots - 1) if mask >> k & 1)
        if len(left) < num_slots:
            result.append(left)
    return result


# ==================== OPERATORS ====================

def pure_density(state: PureState) -> DensityOperator:
    """|xi><xi|."""
    return DensityOperator(state.shape, np.outer(state.amplitudes, state.amplitudes.conj()))


def partial_trace_last(rho: DensityOperator) -> DensityOperator:
    """Reduced operator over slots 1..N-1."""
    dims = rho.shape.dims
    left = math.prod(dims[:-1])
    last = dims[-1]
    blocks = rho.matrix.reshape(left, last, left, last)
    reduced = np.einsum("ikjk->ij", blocks)
    reduced = (reduced + reduced.conj().T) / 2
    shape = SpaceShape(dims[:-1], reduced=len(dims) - 1 < 2)
    return DensityOperator(shape, reduced, tolerance=max(rho.tolerance, TOLERANCES["trace"]))


def partial_transpose(matrix: np.ndarray, dims: Sequence[int], slot: int) -> np.ndarray:
    """Transpose the row/column indices of one slot (independent test oracle only)."""
    n = len(dims)
    if not 0 <= slot < n:
        raise BoundsError(f"slot {slot} out of range for {n} slots")
    tensor = np.asarray(matrix).reshape(tuple(dims) + tuple(dims))
    tensor = np.swapaxes(tensor, slot, n + slot)
    size = math.prod(dims)
    return tensor.reshape(size, size)


def trace_norm(matrix: np.ndarray) -> float:
    """Sum of singular values."""
    return float(np.sum(np.linalg.svd(np.asarray(matrix), compute_uv=False)))


def apply_local(state: PureState, operator: np.ndarray, slot: int) -> PureState:
    """(1 (x) ... (x) U (x) ... (x) 1) xi with U acting on `slot` (0-based)."""
    if not 0 <= slot < state.shape.num_slots:
        raise BoundsError(f"slot {slot} out of range for shape {state.shape}")
    dim = state.dims[slot]
    operator = np.asarray(operator, dtype=complex)
    if operator.shape != (dim, dim):
        raise ShapeError(f"operator on slot {slot} must be {dim}x{dim}, got {operator.shape}")
    moved = np.tensordot(operator, state.tensor, axes=([1], [slot]))
    moved = np.moveaxis(moved, 0, slot)
    return PureState(state.shape, moved.reshape(-1), tolerance=max(state.tolerance, 1e-8))


def product_density(local_states: Sequence[np.ndarray]) -> DensityOperator:
    """sigma_1 (x) ... (x) sigma_N for local density matrices."""
    matrices = [np.asarray(s, dtype=complex) for s in local_states]
    shape = SpaceShape(tuple(m.shape[0] for m in matrices))
    return DensityOperator(shape, reduce(np.kron, matrices))


# ==================== RANDOM GENERATION ====================

def _gaussian(rng: np.random.Generator, size) -> np.ndarray:
    return rng.standard_normal(size) + 1j * rng.standard_normal(size)


def random_unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    vector = _gaussian(rng, dim)
    return vector / np.linalg.norm(vector)


def random_state(shape: SpaceShape, seed: int) -> PureState:
    """Unitarily invariant random state (normalized complex Gaussian amplitudes)."""
    rng = np.random.default_rng(seed)
    return PureState(shape, random_unit_vector(shape.total_dim, rng))


def random_product(shape: SpaceShape, seed: int) -> ProductVector:
    """Product of independent unitarily invariant factors."""
    rng = np.random.default_rng(seed)
    return ProductVector(tuple(random_unit_vector(d, rng) for d in shape.dims))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary via QR with phase correction."""
    q, r = np.linalg.qr(_gaussian(rng, (dim, dim)) / np.sqrt(2))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_density(shape: SpaceShape, seed: int, rank: Optional[int] = None) -> DensityOperator:
    """Ginibre-induced random density operator of the given rank (full rank by default)."""
    rng = np.random.default_rng(seed)
    size = shape.total_dim
    g = _gaussian(rng, (size, rank or size))
    matrix = g @ g.conj().T
    matrix = (matrix + matrix.conj().T) / 2
    return DensityOperator(shape, matrix / np.real(np.trace(matrix)))


# ==================== STANDARD STATES ====================

def basis_vector(dim: int, index: int) -> np.ndarray:
    vector = np.zeros(dim, dtype=complex)
    vector[index] = 1.0
    return vector


def standard_state(name: str, shape: SpaceShape) -> PureState:
    """
    Named reference states.

    Args:
        name: 'bell' (bipartite flat Schmidt vector), 'ghz', 'w' or 'basis_product'
        shape: Target shape

    Returns:
        PureState
    """
    dims = shape.dims
    if name == "basis_product":
        return expand_product(ProductVector(tuple(basis_vector(d, 0) for d in dims)), shape)
    if name in ("bell", "ghz"):
        if name == "bell" and shape.num_slots != 2:
            raise ShapeError(f"the bell state needs two slots, got {shape}")
        rank = min(dims)
        amplitudes = np.zeros(shape.total_dim, dtype=complex)
        for i in range(rank):
            amplitudes[flatten_index(shape, [i] * shape.num_slots)] = 1.0
        return PureState(shape, amplitudes / np.sqrt(rank))
    if name == "w":
        if min(dims) < 2:
            raise ShapeError(f"the W state needs every dimension >= 2, got {shape}")
        amplitudes = np.zeros(shape.total_dim, dtype=complex)
        for slot in range(shape.num_slots):
            index = [0] * shape.num_slots
            index[slot] = 1
            amplitudes[flatten_index(shape, index)] = 1.0
        return PureState(shape, amplitudes / np.sqrt(shape.num_slots))
    raise ValueError(f"unknown standard state '{name}'")


def werner_state(p: float, dim: int = 2) -> DensityOperator:
    """p |bell><bell| + (1 - p) identity / dim**2 on (dim, dim)."""
    if not 0.0 <= p <= 1.0:
        raise InvariantError(f"mixing parameter must lie in [0, 1], got {p}")
    shape = SpaceShape((dim, dim))
    bell = standard_state("bell", shape).amplitudes
    size = shape.total_dim
    matrix = p * np.outer(bell, bell.conj()) + (1 - p) * np.eye(size) / size
    return DensityOperator(shape, matrix)


def as_state(vector: Union[np.ndarray, PureState], shape: SpaceShape) -> PureState:
    if isinstance(vector, PureState):
        return vector
    return PureState(shape, vector)
