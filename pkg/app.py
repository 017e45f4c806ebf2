# ==================== IMPORTS ====================
# Core libraries
import argparse
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

# Logging
import logging

# App modules
from constants import EXIT_CODES, SOLVER_DEFAULTS
from cli_io import (
    bracket_report,
    complex_list,
    csv_row,
    decomposition_report,
    dumps_report,
    load_state_file,
    matrix_report,
    product_report,
    save_state_file,
    separable_report,
    witness_report,
    write_csv,
)
from injective_norm import SolverOptions, distance_to_V, geometric_measure, injective_norm
from projective_norm import hull_membership, is_decomposable, projective_norm
from maximal_vectors import (
    VERDICT_MAXIMAL,
    VERDICT_NOT_MAXIMAL,
    connect_maximal,
    connection_residual,
    is_maximal,
    make_maximal,
    purification_check,
)
from inner_radius import inner_radius, sup_distance, vball_sup_check
from state_entanglement import (
    VERDICT_UNDECIDED,
    classify,
    entanglement_details,
    lipschitz_check,
    pure_state_entanglement,
)
from divergence_demo import build_divergent
from acceptance import run_acceptance
from tensor_core import DensityOperator, PureState, SpaceShape, pure_density
from utils import TensorGeometryError, UnsupportedShapeError, configure_logging

logger = logging.getLogger("tensorgeom")

# A command returns its JSON report, its CSV rows and whether the verdict is undecided
CommandResult = Tuple[Dict[str, Any], List[Dict[str, Any]], bool]


# ==================== ARGUMENT HELPERS ====================

def parse_dims(text: str) -> Tuple[int, ...]:
    try:
        dims = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must be comma-separated integers, got '{text}'")
    if not dims or any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError(f"dims must be positive, got '{text}'")
    return dims


def solver_options(args: argparse.Namespace) -> SolverOptions:
    return SolverOptions(restarts=args.restarts, max_iterations=args.max_iterations,
                         tolerance=args.tol, seed=args.seed)


def load_pure(path: str) -> PureState:
    state = load_state_file(path)
    if not isinstance(state, PureState):
        raise TensorGeometryError(f"'{path}' holds a density operator; this command needs a vector state")
    return state


def load_density(path: str) -> DensityOperator:
    state = load_state_file(path)
    return pure_density(state) if isinstance(state, PureState) else state


# ==================== VECTOR NORM COMMANDS ====================

def cmd_inj_norm(args, opts) -> CommandResult:
    state = load_pure(args.file)
    bracket = injective_norm(state, opts)
    report = {"command": "inj-norm", "dims": list(state.dims), "injective_norm": bracket_report(bracket),
              "nearest_product": product_report(bracket.lower_certificate)}
    return report, [csv_row("injective_norm", bracket.lower, bracket.upper, bracket.upper_certificate)], False


def cmd_proj_norm(args, opts) -> CommandResult:
    state = load_pure(args.file)
    bracket = projective_norm(state, opts, generic=args.generic)
    dual = bracket.lower_certificate
    report = {"command": "proj-norm", "dims": list(state.dims), "projective_norm": bracket_report(bracket),
              "decomposition": decomposition_report(bracket.upper_decomposition),
              "dual_certificate": complex_list(dual) if dual is not None else None}
    return report, [csv_row("projective_norm", bracket.lower, bracket.upper, bracket.upper_certificate)], False


def cmd_distance(args, opts) -> CommandResult:
    state = load_pure(args.file)
    bracket = distance_to_V(state, opts)
    report = {"command": "distance", "dims": list(state.dims), "distance": bracket_report(bracket),
              "nearest_product": product_report(bracket.lower_certificate)}
    return report, [csv_row("distance_to_V", bracket.lower, bracket.upper)], False


def cmd_geometric_measure(args, opts) -> CommandResult:
    state = load_pure(args.file)
    bracket = geometric_measure(state, opts)
    report = {"command": "geometric-measure", "dims": list(state.dims),
              "geometric_measure": bracket_report(bracket)}
    return report, [csv_row("geometric_measure", bracket.lower, bracket.upper)], False


def cmd_is_decomposable(args, opts) -> CommandResult:
    state = load_pure(args.file)
    verdict = is_decomposable(state, opts, tol=args.threshold)
    report = {"command": "is-decomposable", "decomposable": verdict.decomposable, "overlap": verdict.overlap,
              "certificate": product_report(verdict.certificate) if verdict.certificate is not None else None}
    return report, [csv_row("max_product_overlap", verdict.overlap, 1.0, str(verdict.decomposable))], False


def cmd_hull(args, opts) -> CommandResult:
    state = load_pure(args.file)
    verdict = hull_membership(args.scale * state.amplitudes, state.shape, opts)
    report = {"command": "hull", "scale": args.scale, "verdict": verdict.verdict,
              "projective_norm": bracket_report(verdict.bracket)}
    rows = [csv_row("projective_norm", verdict.bracket.lower, verdict.bracket.upper, verdict.verdict)]
    return report, rows, verdict.verdict == "undecided"


# ==================== MAXIMAL VECTOR COMMANDS ====================

def cmd_is_maximal(args, opts) -> CommandResult:
    state = load_pure(args.file)
    verdict = is_maximal(state, opts, tol=args.threshold)
    report = {
        "command": "is-maximal",
        "verdict": verdict.verdict,
        "inner_radius": verdict.inner_radius,
        "evidence": {
            "injective_norm": bracket_report(verdict.injective),
            "projective_norm": bracket_report(verdict.projective) if verdict.projective is not None else None,
            "distance": bracket_report(verdict.distance),
            "injective_minimal": verdict.injective_minimal,
            "projective_maximal": verdict.projective_maximal,
            "distance_maximal": verdict.distance_maximal,
        },
    }
    rows = [csv_row("injective_norm", verdict.injective.lower, verdict.injective.upper, verdict.verdict),
            csv_row("distance_to_V", verdict.distance.lower, verdict.distance.upper)]
    if verdict.projective is not None:
        rows.append(csv_row("projective_norm", verdict.projective.lower, verdict.projective.upper))
    return report, rows, verdict.verdict not in (VERDICT_MAXIMAL, VERDICT_NOT_MAXIMAL)


def cmd_make_maximal(args, opts) -> CommandResult:
    shape = SpaceShape(args.dims)
    state = make_maximal(shape, args.seed, canonical=args.canonical)
    save_state_file(state, args.output)
    report = {"command": "make-maximal", "dims": list(shape.dims), "seed": args.seed, "output": args.output}
    return report, [], False


def cmd_purification(args, opts) -> CommandResult:
    state = load_pure(args.file)
    result = purification_check(state)
    report = {"command": "purification", "passes": result.passes, "deviation": result.deviation}
    return report, [csv_row("marginal_deviation", result.deviation, result.deviation, str(result.passes))], False


def cmd_connect(args, opts) -> CommandResult:
    first, second = load_pure(args.first), load_pure(args.second)
    unitary = connect_maximal(first, second)
    residual, defect = connection_residual(first, second, unitary)
    report = {"command": "connect", "unitary": matrix_report(unitary),
              "residual": residual, "unitarity_defect": defect}
    return report, [csv_row("connection_residual", residual, residual, f"unitarity defect {defect:.3g}")], False


# ==================== INNER RADIUS COMMANDS ====================

def cmd_inner_radius(args, opts) -> CommandResult:
    shape = SpaceShape(args.dims)
    result = inner_radius(shape, opts, force_search=args.search)
    report = {"command": "inner-radius", "dims": list(shape.dims), "mode": result.mode,
              "strict": result.strict, "inner_radius": bracket_report(result.bracket),
              "minimizer": complex_list(result.minimizer.amplitudes) if result.minimizer is not None else None}
    rows = [csv_row("inner_radius", result.bracket.lower, result.bracket.upper,
                    f"{result.mode}{' strict lower' if result.strict else ''}")]
    return report, rows, False


def cmd_sup_distance(args, opts) -> CommandResult:
    shape = SpaceShape(args.dims)
    bracket = sup_distance(shape, opts, force_search=args.search)
    report = {"command": "sup-distance", "dims": list(shape.dims), "sup_distance": bracket_report(bracket)}
    return report, [csv_row("sup_distance", bracket.lower, bracket.upper)], False


def cmd_vball(args, opts) -> CommandResult:
    check = vball_sup_check(SpaceShape(args.dims), opts)
    report = {
        "command": "vball",
        "dims": list(check.shape.dims),
        "target": check.target,
        "achieved_ratio": check.achieved_ratio,
        "passed": check.passed,
        "samples": [{"label": s.label, "ratio_lower": s.ratio_lower, "ratio_upper": s.ratio_upper}
                    for s in check.samples],
    }
    rows = [csv_row(f"vball_ratio_{s.label}", s.ratio_lower, s.ratio_upper) for s in check.samples]
    return report, rows, False


# ==================== ENTANGLEMENT COMMANDS ====================

def cmd_entanglement(args, opts) -> CommandResult:
    state = load_state_file(args.file)
    if isinstance(state, PureState):
        bracket = pure_state_entanglement(state, opts)
        report = {"command": "entanglement", "kind": "state", "entanglement": bracket_report(bracket),
                  "decomposition": decomposition_report(bracket.upper_decomposition)}
    else:
        details = entanglement_details(state, opts, search_separable=True if args.separable else None)
        bracket = details.bracket
        report = {"command": "entanglement", "kind": "density", "entanglement": bracket_report(bracket),
                  "witness": witness_report(bracket.lower_certificate),
                  "upper_candidates": [{"label": label, "value": value} for label, value in details.upper_candidates],
                  "separable_decomposition": separable_report(details.separable)}
    return report, [csv_row("entanglement", bracket.lower, bracket.upper, bracket.upper_certificate)], False


def cmd_classify(args, opts) -> CommandResult:
    rho = load_density(args.file)
    result = classify(rho, opts, tol=args.threshold)
    report = {"command": "classify", "verdict": result.verdict, "entanglement": bracket_report(result.bracket),
              "witness": witness_report(result.witness),
              "decomposition": separable_report(result.decomposition)}
    rows = [csv_row("entanglement", result.bracket.lower, result.bracket.upper, result.verdict)]
    return report, rows, result.verdict == VERDICT_UNDECIDED


def cmd_lipschitz(args, opts) -> CommandResult:
    rho, sigma = load_density(args.first), load_density(args.second)
    result = lipschitz_check(rho, sigma, opts)
    report = {
        "command": "lipschitz",
        "rho": bracket_report(result.rho_bracket),
        "sigma": bracket_report(result.sigma_bracket),
        "trace_distance": result.distance,
        "bound": result.bound,
        "midpoint_gap": result.midpoint_gap,
        "certified_gap": result.certified_gap,
        "widest_gap": result.widest_gap,
        "violation": result.violation,
    }
    rows = [csv_row("entanglement_rho", result.rho_bracket.lower, result.rho_bracket.upper),
            csv_row("entanglement_sigma", result.sigma_bracket.lower, result.sigma_bracket.upper),
            csv_row("lipschitz_gap", result.certified_gap, result.widest_gap, f"bound {result.bound!r}")]
    return report, rows, False


# ==================== DEMO AND SELFTEST ====================

def cmd_demo_divergence(args, opts) -> CommandResult:
    truncation, table = build_divergent(args.k)
    report = {"command": "demo-divergence", "side": truncation.side,
              "nuclear_norm": truncation.nuclear_norm,
              "normalized_nuclear_norm": truncation.normalized_nuclear_norm,
              "table": table.to_dict(orient="records")}
    rows = [csv_row(f"block_{int(row.k)}", float(row.lower_bound), float(row.cumulative_nuclear_norm),
                    f"n_k={int(row.block_dim)}") for row in table.itertuples()]
    return report, rows, False


def cmd_selftest(args, opts) -> CommandResult:
    results = run_acceptance(opts, only=args.only)
    report = {"command": "selftest", "passed": bool(results["passed"].all()),
              "criteria": results.to_dict(orient="records")}
    rows = [csv_row(str(row.name), float(row.passed), float(row.passed), str(row.detail))
            for row in results.itertuples()]
    return report, rows, False


# ==================== PARSER ====================

def common_options(suppress: bool) -> argparse.ArgumentParser:
    """Flags accepted both before and after the subcommand name.

    Subcommand copies default to SUPPRESS so a flag given before the
    subcommand is not overwritten by the subparser default.
    """
    def default(value):
        return argparse.SUPPRESS if suppress else value

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", action="store_true", default=default(False), help="debug logging on stderr")
    common.add_argument("--strict", action="store_true", default=default(False),
                        help="exit with code 4 on undecided verdicts")
    common.add_argument("--csv", metavar="PATH", default=default(None),
                        help="also write quantity,lower,upper,notes rows")
    common.add_argument("--restarts", type=int, default=default(SOLVER_DEFAULTS["restarts"]))
    common.add_argument("--seed", type=int, default=default(SOLVER_DEFAULTS["seed"]))
    common.add_argument("--tol", type=float, default=default(SOLVER_DEFAULTS["tolerance"]))
    common.add_argument("--max-iterations", type=int, default=default(SOLVER_DEFAULTS["max_iterations"]))
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tensorgeom", parents=[common_options(suppress=False)],
                                     description="Certified norm brackets and entanglement geometry of tensor products")
    subcommand_options = common_options(suppress=True)
    commands = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler: Callable, help_text: str, file_args: Sequence[str] = ("file",)):
        sub = commands.add_parser(name, help=help_text, parents=[subcommand_options])
        for file_arg in file_args:
            sub.add_argument(file_arg, metavar=file_arg.upper())
        sub.set_defaults(handler=handler)
        return sub

    add("inj-norm", cmd_inj_norm, "injective norm bracket and nearest product vector")
    add("proj-norm", cmd_proj_norm, "projective norm bracket and decomposition").add_argument(
        "--generic", action="store_true", help="skip the exact two-slot shortcut")
    add("distance", cmd_distance, "distance to the set of unit product vectors")
    add("geometric-measure", cmd_geometric_measure, "1 - injective norm squared")
    add("is-decomposable", cmd_is_decomposable, "product-vector test").add_argument(
        "--threshold", type=float, default=1e-6)
    add("hull", cmd_hull, "membership in the convex hull of product vectors").add_argument(
        "--scale", type=float, default=1.0, help="test scale * vector")
    add("is-maximal", cmd_is_maximal, "maximality verdict with extremal evidence").add_argument(
        "--threshold", type=float, default=1e-6)

    make = add("make-maximal", cmd_make_maximal, "write a maximal vector StateFile", file_args=())
    make.add_argument("--dims", type=parse_dims, required=True)
    make.add_argument("--canonical", action="store_true", help="identity frame instead of a random one")
    make.add_argument("-o", "--output", required=True)

    add("purification", cmd_purification, "marginal over all but the last slot against identity / m")
    add("connect", cmd_connect, "local unitary on the last slot mapping FIRST to SECOND",
        file_args=("first", "second"))

    for name, handler, help_text in [
        ("inner-radius", cmd_inner_radius, "inner radius bracket"),
        ("sup-distance", cmd_sup_distance, "largest distance of a unit vector to product vectors"),
    ]:
        sub = add(name, handler, help_text, file_args=())
        sub.add_argument("--dims", type=parse_dims, required=True)
        sub.add_argument("--search", action="store_true", help="numerical search even for closed-form shapes")
    add("vball", cmd_vball, "operator-norm to V-norm ratio against r^-2", file_args=()).add_argument(
        "--dims", type=parse_dims, required=True)

    add("entanglement", cmd_entanglement, "entanglement bracket of a state or density operator").add_argument(
        "--separable", action="store_true", help="always run the separable decomposition search")
    add("classify", cmd_classify, "separable / entangled / maximally-entangled / undecided").add_argument(
        "--threshold", type=float, default=1e-6)
    add("lipschitz", cmd_lipschitz, "continuity check between two density operators",
        file_args=("first", "second"))

    add("demo-divergence", cmd_demo_divergence, "truncations with unbounded projective norm",
        file_args=()).add_argument("--k", type=int, required=True)
    add("selftest", cmd_selftest, "run the acceptance criteria", file_args=()).add_argument(
        "--only", type=int, nargs="*", help="criterion numbers to run")
    return parser


# ==================== ENTRY POINT ====================

def emit_error(kind: str, message: str) -> None:
    print(dumps_report({"error": {"kind": kind, "message": message}}))


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        opts = solver_options(args)
        report, rows, undecided = args.handler(args, opts)
        print(dumps_report(report))
        if args.csv and rows:
            write_csv(rows, args.csv)
    except UnsupportedShapeError as e:
        logger.error(f"Unsupported shape: {e}")
        emit_error("unsupported_shape", str(e))
        return EXIT_CODES["unsupported_shape"]
    except TensorGeometryError as e:
        logger.error(f"Validation error: {e}")
        emit_error(type(e).__name__, str(e))
        return EXIT_CODES["validation_error"]

    if args.command == "selftest" and not report["passed"]:
        return EXIT_CODES["selftest_failed"]
    if args.strict and undecided:
        logger.warning("Verdict undecided under --strict")
        return EXIT_CODES["undecided"]
    return EXIT_CODES["success"]


if __name__ == "__main__":
    sys.exit(main())
