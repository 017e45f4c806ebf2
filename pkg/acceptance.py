# ==================== IMPORTS ====================
# Numerics
import itertools
import math
import time
import numpy as np
import pandas as pd
from dataclasses import asdict, dataclass, replace
from typing import Callable, List, Optional, Sequence

# Logging
import logging

# Local modules
from constants import ACCEPTANCE_SETTINGS
from divergence_demo import build_divergent
from injective_norm import SolverOptions, injective_norm
from inner_radius import MODE_CLOSED_FORM, inner_radius, vball_sup_check
from maximal_vectors import (
    connect_maximal,
    connection_residual,
    is_maximal,
    make_maximal,
    purification_check,
    refinement_agreement,
)
from projective_norm import projective_norm
from state_entanglement import entanglement, lipschitz_from_brackets
from tensor_core import (
    DensityOperator,
    SpaceShape,
    apply_local,
    matricize,
    partial_transpose,
    random_density,
    random_product,
    random_state,
    random_unitary,
    werner_state,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


# ==================== CRITERIA ====================

def _criterion_options(opts: SolverOptions) -> SolverOptions:
    """Cap restarts and iterations for criteria that call the searches many times."""
    return opts.derived(restarts=min(opts.restarts, ACCEPTANCE_SETTINGS["restarts"]),
                        max_iterations=min(opts.max_iterations, ACCEPTANCE_SETTINGS["max_iterations"]))


def bipartite_oracle(opts: SolverOptions, count: int = 100) -> CriterionResult:
    shapes = [(m, n) for m in range(2, 9) for n in range(m, 9)]
    worst = 0.0
    for index in range(count):
        shape = SpaceShape(shapes[index % len(shapes)])
        state = random_state(shape, opts.seed + index)
        singular = np.linalg.svd(matricize(state, 1), compute_uv=False)
        inj = injective_norm(state, opts)
        proj = projective_norm(state, opts)
        worst = max(worst, abs(inj.lower - singular[0]), abs(inj.upper - singular[0]),
                    abs(proj.lower - singular.sum()), abs(proj.upper - singular.sum()))
    return CriterionResult(1, "bipartite oracle equivalence", worst <= 1e-8, f"max deviation {worst:.3g}")


def canonical_maximal(opts: SolverOptions) -> CriterionResult:
    opts = _criterion_options(opts)
    failures = []
    for dims in [(2, 2), (2, 4), (2, 2, 4), (2, 3, 6)]:
        shape = SpaceShape(dims)
        m = shape.left_dim
        r = 1 / math.sqrt(m)
        state = make_maximal(shape, opts.seed)
        verdict = is_maximal(state, opts)
        inj, proj, dist = verdict.injective, verdict.projective, verdict.distance
        target_distance = math.sqrt(2 * (1 - r))
        checks = [
            max(abs(inj.lower - r), abs(inj.upper - r)) <= 1e-8,
            max(abs(proj.lower - math.sqrt(m)), abs(proj.upper - math.sqrt(m))) <= 1e-6,
            max(abs(dist.lower - target_distance), abs(dist.upper - target_distance)) <= 1e-6,
            purification_check(state).deviation <= 1e-10,
        ]
        if not all(checks):
            failures.append(f"{shape}: {checks}")
    return CriterionResult(2, "canonical maximal vectors", not failures, "; ".join(failures) or "4 shapes")


def _local_unitary_image(state, seed: int):
    rng = np.random.default_rng(seed)
    for slot, dim in enumerate(state.dims):
        state = apply_local(state, random_unitary(dim, rng), slot)
    return state


def simultaneity(opts: SolverOptions, count: int = 10) -> CriterionResult:
    opts = _criterion_options(opts)
    shape = SpaceShape((2, 2, 4))
    base = make_maximal(shape, opts.seed)
    maximal_ok = sum(is_maximal(_local_unitary_image(base, opts.seed + k), opts).all_extremal for k in range(count))
    random_ok = sum(is_maximal(random_state(shape, opts.seed + 100 + k), opts).none_extremal for k in range(count))
    passed = maximal_ok == count and random_ok == count
    return CriterionResult(3, "extremal simultaneity", passed,
                           f"{maximal_ok}/{count} maximal images extremal, {random_ok}/{count} random non-extremal")


def inner_radius_values(opts: SolverOptions) -> CriterionResult:
    opts = _criterion_options(opts)
    closed = inner_radius(SpaceShape((2, 3, 6)), opts)
    closed_ok = (closed.mode == MODE_CLOSED_FORM and closed.bracket.lower == 1 / math.sqrt(6)
                 and closed.bracket.upper == 1 / math.sqrt(6))
    search = inner_radius(SpaceShape((2, 2, 2)), opts)
    bracket = search.bracket
    search_ok = search.strict and bracket.lower >= 0.5 and bracket.upper <= 0.7072 and bracket.upper <= 0.667 + 1e-3
    return CriterionResult(4, "inner radius", closed_ok and search_ok,
                           f"(2,2,2) bracket [{bracket.lower:.6f}, {bracket.upper:.6f}]")


def _random_separable(shape: SpaceShape, seed: int, components: int = 6) -> DensityOperator:
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(components))
    matrix = np.zeros((shape.total_dim, shape.total_dim), dtype=complex)
    for k, weight in enumerate(weights):
        vector = random_product(shape, seed * 1000 + k).vector()
        matrix += weight * np.outer(vector, vector.conj())
    return DensityOperator(shape, (matrix + matrix.conj().T) / 2)


def ppt_boundary(steps: int = 40) -> float:
    """Werner parameter where the partial transpose first turns non-positive."""
    low, high = 0.0, 1.0
    for _ in range(steps):
        middle = (low + high) / 2
        smallest = np.linalg.eigvalsh(partial_transpose(werner_state(middle).matrix, (2, 2), 1))[0]
        if smallest < 0:
            high = middle
        else:
            low = middle
    return (low + high) / 2


def werner_boundary(opts: SolverOptions, steps: int = 6, tol: float = 1e-6) -> float:
    """Bisection on 'a witness certifies E > 1'; only lower endpoints are read."""
    low, high = 0.0, 1.0
    for _ in range(steps):
        middle = (low + high) / 2
        if entanglement(werner_state(middle), opts, search_separable=False).lower > 1 + tol:
            high = middle
        else:
            low = middle
    return (low + high) / 2


def faithfulness(opts: SolverOptions, count: int = 20) -> CriterionResult:
    opts = _criterion_options(opts)
    shape = SpaceShape((2, 2))
    worst = max(entanglement(_random_separable(shape, opts.seed + k), opts).upper for k in range(count))
    bell = werner_state(1.0)
    bell_bracket = entanglement(bell, opts)
    bell_ok = abs(bell_bracket.lower - 2) <= 1e-6 and abs(bell_bracket.upper - 2) <= 1e-6
    oracle = ppt_boundary()
    estimate = werner_boundary(opts)
    passed = worst <= 1 + 1e-6 and bell_ok and abs(estimate - oracle) <= 0.05
    return CriterionResult(5, "entanglement faithfulness", passed,
                           f"max separable upper {worst:.10f}; Werner boundary {estimate:.4f} vs oracle {oracle:.4f}")


def bounds_and_lipschitz(opts: SolverOptions, count: int = 200) -> CriterionResult:
    opts = _criterion_options(opts)
    shape = SpaceShape((2, 2))
    states = [random_density(shape, opts.seed + k) for k in range(count)]
    # The r^-2 cap already keeps upper endpoints at 2, so the separable search is skipped
    brackets = [entanglement(rho, opts, search_separable=False) for rho in states]
    in_range = all(b.lower >= 1 - 1e-8 and b.upper <= 2 + 1e-8 for b in brackets)
    violations = sum(
        lipschitz_from_brackets(states[i], states[j], brackets[i], brackets[j]).violation
        for i, j in itertools.combinations(range(count), 2)
    )
    return CriterionResult(6, "bounds and Lipschitz", in_range and violations == 0,
                           f"brackets in range: {in_range}; violations: {violations}")


def transitivity(opts: SolverOptions, count: int = 10) -> CriterionResult:
    shape = SpaceShape((2, 2, 4))
    worst_residual, worst_defect = 0.0, 0.0
    for k in range(count):
        first = make_maximal(shape, opts.seed + 2 * k)
        second = make_maximal(shape, opts.seed + 2 * k + 1)
        residual, defect = connection_residual(first, second, connect_maximal(first, second))
        worst_residual, worst_defect = max(worst_residual, residual), max(worst_defect, defect)
    passed = worst_residual <= 1e-6 and worst_defect <= 1e-10
    return CriterionResult(7, "unitary transitivity", passed,
                           f"max residual {worst_residual:.3g}, max unitarity defect {worst_defect:.3g}")


def refinement(opts: SolverOptions, count: int = 20) -> CriterionResult:
    opts = _criterion_options(opts)
    shape = SpaceShape((2, 2, 4))
    states = [make_maximal(shape, opts.seed + k) for k in range(count)]
    states += [random_state(shape, opts.seed + 500 + k) for k in range(count)]
    agreements = sum(refinement_agreement(state, opts).agree for state in states)
    return CriterionResult(8, "refinement stability", agreements == len(states),
                           f"{agreements}/{len(states)} agree")


def divergence(_: SolverOptions) -> CriterionResult:
    truncation, table = build_divergent(5)
    expected = np.cumsum([2 ** (k / 2) for k in range(1, 6)])
    deviation = float(np.max(np.abs(table["cumulative_nuclear_norm"].to_numpy() - expected)))
    deviation = max(deviation, abs(truncation.nuclear_norm - expected[-1]))
    return CriterionResult(9, "divergence demo", deviation <= 1e-8, f"max deviation {deviation:.3g}")


def vball(opts: SolverOptions) -> CriterionResult:
    reports = [vball_sup_check(SpaceShape(dims), opts) for dims in [(2, 2), (2, 2, 4)]]
    detail = "; ".join(f"{r.shape}: {r.achieved_ratio:.8f} vs {r.target:.1f}" for r in reports)
    return CriterionResult(10, "V-ball sup", all(r.passed for r in reports), detail)


CRITERIA: List[Callable[[SolverOptions], CriterionResult]] = [
    bipartite_oracle, canonical_maximal, simultaneity, inner_radius_values, faithfulness,
    bounds_and_lipschitz, transitivity, refinement, divergence, vball,
]


def run_acceptance(opts: Optional[SolverOptions] = None, only: Optional[Sequence[int]] = None) -> pd.DataFrame:
    """Run the criteria (all, or the numbers in `only`) and tabulate pass/fail."""
    opts = opts if opts is not None else SolverOptions()
    results = []
    for number, criterion in enumerate(CRITERIA, start=1):
        if only and number not in only:
            continue
        logger.info(f"Running acceptance criterion {number}: {criterion.__name__}")
        started = time.perf_counter()
        try:
            result = criterion(opts)
        except Exception as e:
            logger.error(f"Criterion {number} raised: {e}")
            result = CriterionResult(number, criterion.__name__, False, f"error: {e}")
        result = replace(result, seconds=round(time.perf_counter() - started, 3))
        logger.info(f"Criterion {number} {'passed' if result.passed else 'FAILED'} in {result.seconds:.1f} s: {result.detail}")
        results.append(result)
    table = pd.DataFrame([asdict(r) for r in results], columns=["number", "name", "passed", "detail", "seconds"])
    if table["seconds"].sum() > ACCEPTANCE_SETTINGS["runtime_budget_seconds"]:
        logger.warning(f"Acceptance run took {table['seconds'].sum():.0f} s, over the "
                       f"{ACCEPTANCE_SETTINGS['runtime_budget_seconds']} s budget")
    return table
