# constants.py
"""
Unified constants for tensorgeom.
Includes tolerances, solver defaults, size caps, search schedules and I/O settings.
"""

# ==================== TOLERANCES ====================
# Used consistently across all modules when validating or comparing values
TOLERANCES = {
    "unit_norm": 1e-9,         # construction of PureState / ProductVector
    "load": 1e-8,              # acceptance of externally loaded StateFiles
    "hermitian": 1e-9,         # entrywise |X - X^H|
    "trace": 1e-9,             # |trace(rho) - 1|
    "min_eigenvalue": -1e-8,   # smallest admissible eigenvalue of a density operator
    "bracket_order": 1e-12,    # lower <= upper + this
    "bracket_crossing": 1e-8,  # relative crossing NormBracket.ordered lifts; larger ones raise
    "net_skip": 1e-9,          # covering net skipped once spectral upper - lower is below this
    "projective_closure": 1e-10,  # relative gap at which the projective search stops early
    "purification": 1e-8,      # purification_check deviation threshold
    "connect_precondition": 1e-6,
    "hull_boundary": 1e-9,     # one-sided tolerance for hull verdicts
    "residual_stop": 1e-10,    # greedy pursuit stops below this residual norm
}

# ==================== SOLVER DEFAULTS ====================
SOLVER_DEFAULTS = {
    "restarts": 64,
    "max_iterations": 500,
    "tolerance": 1e-10,
    "seed": 0,
}

# ==================== SIZE CAPS ====================
MAX_TOTAL_DIM = 2 ** 20          # dense storage cap for a SpaceShape
MAX_OPERATOR_DIM = 256           # operator norms reshape X into total_dim**2 entries
MAX_BIPARTITION_SLOTS = 10       # enumerate all bipartitions up to this many slots
PROJECTIVE_TERM_FACTOR = 4       # ProductDecomposition keeps <= 4 * n_1...n_{N-1} terms
SEPARABLE_ATOM_FACTOR = 4        # separable search keeps <= 4 * total_dim**2 atoms
TOMOGRAPHIC_DICTIONARY_CAP = 4096
DIVERGENCE_MAX_SIDE = 1364       # D = 4 + 16 + 64 + 256 + 1024 at K = 5

# ==================== COVERING NET ====================
# Bloch-sphere grid over one qubit slot; polar rings and azimuth points.
NET_SETTINGS = {
    "polar_steps": 200,
    "azimuth_steps": 160,
    "max_remainder_dim": 256,    # skip the net when the rest of the tensor is larger
    "operator_polar_steps": 60,
    "operator_azimuth_steps": 48,
}

# ==================== PROJECTIVE PURSUIT ====================
PURSUIT_SETTINGS = {
    "irls_iterations": 60,
    "irls_epsilon": 1e-12,
    "column_rounds": 40,
    "greedy_rounds": 64,
    "dual_restarts": 8,
}

# ==================== INNER RADIUS SEARCH ====================
SEARCH_SETTINGS = {
    "temperature": 1e3,
    "anneal_factor": 2.0,
    "anneal_every": 50,
    "descent_iterations": 100,
    "step_size": 0.05,
    "descent_starts": 8,          # best candidates refined by gradient descent
    "inner_restarts": 4,          # alternating-maximization restarts per descent step
}

# ==================== STATE ENTANGLEMENT ====================
ENTANGLEMENT_SETTINGS = {
    "witness_eigenvectors": 4,
    "net_witnesses": 3,            # best witnesses re-normalized with the covering net
    "cutting_plane_rounds": 30,
    "separation_restarts": 8,
    "separable_rounds": 80,
    "polish_max_evaluations": 4000,
    "candidate_separable_gap": 1e-3,
    "classify_tolerance": 1e-6,
    "expectation_iterations": 50,  # alternating eigen-updates per product search
    "polish_max_atoms": 24,
    "lp_max_dim": 36,              # product-projector LP only up to this total dimension
}

# ==================== DIVERGENCE DEMO ====================
DIVERGENCE_DEFAULTS = {"theta_base": 0.5, "dim_base": 4}

# ==================== ACCEPTANCE ====================
# Solver options are capped at these values for the search-heavy criteria
ACCEPTANCE_SETTINGS = {
    "restarts": 8,
    "max_iterations": 200,
    "runtime_budget_seconds": 600,
}

# ==================== SERIALIZATION RULES ====================
STATE_FILE_KEYS = {"dims": "dims", "re": "re", "im": "im", "kind": "kind"}
DENSITY_KIND = "density"
CSV_COLUMNS = ["quantity", "lower", "upper", "notes"]

# ==================== CLI EXIT CODES ====================
EXIT_CODES = {
    "success": 0,
    "selftest_failed": 1,
    "validation_error": 2,
    "unsupported_shape": 3,
    "undecided": 4,
}
