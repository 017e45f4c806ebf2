# ==================== IMPORTS ====================
# Data processing
import math
import numpy as np
import pandas as pd
from dataclasses import dataclass
from typing import Tuple

# Logging
import logging

# Local modules
from constants import DIVERGENCE_DEFAULTS, DIVERGENCE_MAX_SIDE, MAX_TOTAL_DIM
from injective_norm import NormBracket, vector_injective_norm
from tensor_core import PureState, SpaceShape
from utils import BoundsError, ShapeError

logger = logging.getLogger(__name__)

# ==================== MODULE DESCRIPTION ====================
"""
Finite truncations of a unit vector with infinite projective norm.

xi = sum_k sqrt(theta_k / n_k) xi_k with theta_k = theta_base**k, n_k = dim_base**k
and xi_k = sum_{j in S_k} e_j (x) f_j over disjoint index blocks S_k. The
matricization is diagonal, so the Schmidt coefficients are explicit and the
nuclear norm of block k is sqrt(theta_k n_k).
"""

TABLE_COLUMNS = ["k", "block_dim", "theta", "lower_bound", "cumulative_nuclear_norm", "normalized_nuclear_norm"]


@dataclass(frozen=True)
class DivergentTruncation:
    """Diagonal Schmidt data of the truncation at K blocks (before normalization)."""

    num_blocks: int
    theta_base: float
    dim_base: int
    schmidt: np.ndarray

    @property
    def block_dims(self) -> Tuple[int, ...]:
        return tuple(self.dim_base ** k for k in range(1, self.num_blocks + 1))

    @property
    def thetas(self) -> Tuple[float, ...]:
        return tuple(self.theta_base ** k for k in range(1, self.num_blocks + 1))

    @property
    def side(self) -> int:
        return int(self.schmidt.size)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.schmidt))

    @property
    def nuclear_norm(self) -> float:
        """Pre-normalization nuclear norm, sum_k sqrt(theta_k n_k)."""
        return float(np.sum(self.schmidt))

    @property
    def normalized_nuclear_norm(self) -> float:
        return self.nuclear_norm / self.norm

    def state(self) -> PureState:
        """Dense normalized truncation on (D, D); only within the dense storage cap."""
        shape = SpaceShape((self.side, self.side))
        if shape.total_dim > MAX_TOTAL_DIM:
            raise ShapeError(f"dense truncation would need {shape.total_dim} amplitudes (cap {MAX_TOTAL_DIM})")
        return PureState(shape, np.diag(self.schmidt / self.norm).reshape(-1))

    def block_injective(self, k: int) -> NormBracket:
        """Injective norm of the unnormalized block xi_k = sum_j e_j (x) f_j on (n_k, n_k)."""
        if not 1 <= k <= self.num_blocks:
            raise BoundsError(f"block index {k} out of range [1, {self.num_blocks}]")
        n = self.dim_base ** k
        return vector_injective_norm(np.eye(n).reshape(-1), (n, n))

    def table(self) -> pd.DataFrame:
        rows = []
        cumulative, mass = 0.0, 0.0
        for k, (n, theta) in enumerate(zip(self.block_dims, self.thetas), start=1):
            bound = math.sqrt(theta * n)
            cumulative += bound
            mass += theta
            rows.append({
                "k": k,
                "block_dim": n,
                "theta": theta,
                "lower_bound": bound,
                "cumulative_nuclear_norm": cumulative,
                "normalized_nuclear_norm": cumulative / math.sqrt(mass),
            })
        return pd.DataFrame(rows, columns=TABLE_COLUMNS)


def build_divergent(num_blocks: int, theta_base: float = DIVERGENCE_DEFAULTS["theta_base"],
                    dim_base: int = DIVERGENCE_DEFAULTS["dim_base"]) -> Tuple[DivergentTruncation, pd.DataFrame]:
    """
    Truncation with `num_blocks` blocks and its table of per-block lower bounds.

    Args:
        num_blocks: K >= 1
        theta_base: theta_k = theta_base**k
        dim_base: n_k = dim_base**k

    Returns:
        Tuple of (DivergentTruncation, DataFrame with TABLE_COLUMNS)
    """
    if num_blocks < 1:
        raise BoundsError(f"K must be >= 1, got {num_blocks}")
    if dim_base < 1 or not 0 < theta_base:
        raise BoundsError(f"need dim_base >= 1 and theta_base > 0, got {dim_base}, {theta_base}")
    side = sum(dim_base ** k for k in range(1, num_blocks + 1))
    if side > DIVERGENCE_MAX_SIDE:
        raise ShapeError(f"side dimension {side} exceeds the cap {DIVERGENCE_MAX_SIDE}")
    schmidt = np.concatenate([
        np.full(dim_base ** k, math.sqrt(theta_base ** k / dim_base ** k)) for k in range(1, num_blocks + 1)
    ])
    schmidt.setflags(write=False)
    truncation = DivergentTruncation(num_blocks, theta_base, dim_base, schmidt)
    table = truncation.table()
    logger.info(f"Divergent truncation K={num_blocks}: side {side}, nuclear norm {truncation.nuclear_norm:.10f}")
    return truncation, table
