# ==================== IMPORTS ====================
# Data processing
import json
import numpy as np
import pandas as pd
from typing import Any, Dict, List, Optional, Sequence, Union

# Logging
import logging

# Local modules
from constants import CSV_COLUMNS, DENSITY_KIND, STATE_FILE_KEYS, TOLERANCES
from injective_norm import NormBracket
from tensor_core import DensityOperator, ProductVector, PureState, SpaceShape
from utils import StateFileError, TensorGeometryError

logger = logging.getLogger(__name__)

# ==================== MODULE DESCRIPTION ====================
"""
StateFile JSON documents, report serialization and CSV emission.

A StateFile is {"dims": [...], "re": [...], "im": [...]} with amplitudes in
slot-1-slowest order; density files add {"kind": "density"} and hold the
row-major total_dim**2 matrix entries. Floats are written with Python's
shortest round-trip repr, so write -> read is bit-exact.
"""

State = Union[PureState, DensityOperator]


# ==================== STATE FILES ====================

def parse_state_document(text: str, source: str = "<string>") -> State:
    """
    Parse StateFile text into a PureState or DensityOperator.

    Args:
        text: JSON document
        source: Name used in error messages

    Returns:
        PureState, or DensityOperator when kind is 'density'
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise StateFileError(f"{source}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(document, dict):
        raise StateFileError(f"{source}: a StateFile must be a JSON object")
    for key in (STATE_FILE_KEYS["dims"], STATE_FILE_KEYS["re"], STATE_FILE_KEYS["im"]):
        if key not in document:
            raise StateFileError(f"{source}: missing key '{key}'")

    try:
        dims = tuple(int(d) for d in document[STATE_FILE_KEYS["dims"]])
        real = np.asarray(document[STATE_FILE_KEYS["re"]], dtype=float)
        imag = np.asarray(document[STATE_FILE_KEYS["im"]], dtype=float)
    except (TypeError, ValueError) as e:
        raise StateFileError(f"{source}: non-numeric entries ({e})") from e
    if real.shape != imag.shape or real.ndim != 1:
        raise StateFileError(f"{source}: 're' and 'im' must be flat arrays of equal length, "
                             f"got {real.shape} and {imag.shape}")

    try:
        shape = SpaceShape(dims)
    except TensorGeometryError as e:
        raise StateFileError(f"{source}: {e}") from e
    values = real + 1j * imag
    kind = document.get(STATE_FILE_KEYS["kind"], "state")
    try:
        if kind == DENSITY_KIND:
            expected = shape.total_dim ** 2
            if values.size != expected:
                raise StateFileError(f"{source}: expected {expected} density entries for dims {list(dims)}, "
                                     f"got {values.size}")
            matrix = values.reshape(shape.total_dim, shape.total_dim)
            return DensityOperator(shape, matrix, tolerance=TOLERANCES["load"])
        if values.size != shape.total_dim:
            raise StateFileError(f"{source}: expected {shape.total_dim} amplitudes for dims {list(dims)}, "
                                 f"got {values.size}")
        return PureState(shape, values, tolerance=TOLERANCES["load"])
    except StateFileError:
        raise
    except TensorGeometryError as e:
        raise StateFileError(f"{source}: {e}") from e


def load_state_file(path: str) -> State:
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as e:
        raise StateFileError(f"cannot read '{path}': {e}") from e
    state = parse_state_document(text, source=path)
    logger.info(f"Loaded {type(state).__name__} on {state.shape} from '{path}'")
    return state


def state_document(state: State) -> Dict[str, Any]:
    if isinstance(state, DensityOperator):
        values = state.matrix.reshape(-1)
        document = {STATE_FILE_KEYS["kind"]: DENSITY_KIND}
    else:
        values = state.amplitudes
        document = {}
    document[STATE_FILE_KEYS["dims"]] = list(state.shape.dims)
    document[STATE_FILE_KEYS["re"]] = [float(x) for x in np.real(values)]
    document[STATE_FILE_KEYS["im"]] = [float(x) for x in np.imag(values)]
    return document


def save_state_file(state: State, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(dumps_report(state_document(state)))
            handle.write("\n")
    except OSError as e:
        raise StateFileError(f"cannot write '{path}': {e}") from e
    logger.info(f"Saved {type(state).__name__} on {state.shape} to '{path}'")


# ==================== REPORTS ====================

def dumps_report(report: Dict[str, Any]) -> str:
    """Sorted keys and round-trip float repr; identical input gives identical bytes."""
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False)


def complex_list(values: np.ndarray) -> Dict[str, List[float]]:
    values = np.asarray(values).reshape(-1)
    return {"re": [float(x) for x in np.real(values)], "im": [float(x) for x in np.imag(values)]}


def product_report(product: ProductVector) -> List[Dict[str, List[float]]]:
    return [complex_list(f) for f in product.factors]


def matrix_report(matrix: np.ndarray) -> Dict[str, Any]:
    matrix = np.asarray(matrix)
    return {"rows": int(matrix.shape[0]), **complex_list(matrix)}


def bracket_report(bracket: NormBracket) -> Dict[str, Any]:
    return {
        "lower": bracket.lower,
        "upper": bracket.upper,
        "upper_certificate": bracket.upper_certificate,
        "iterations": bracket.iterations,
        "restarts_used": bracket.restarts_used,
    }


def decomposition_report(decomposition) -> Optional[Dict[str, Any]]:
    if decomposition is None:
        return None
    return {
        "cost": decomposition.cost,
        "terms": [
            {"coefficient": {"re": float(np.real(c)), "im": float(np.imag(c))}, "factors": product_report(p)}
            for c, p in decomposition.terms
        ],
    }


def separable_report(decomposition) -> Optional[Dict[str, Any]]:
    if decomposition is None:
        return None
    return {
        "residual": decomposition.residual,
        "weights": list(decomposition.weights),
        "states": [product_report(p) for p in decomposition.states],
    }


def witness_report(witness) -> Optional[Dict[str, Any]]:
    if witness is None:
        return None
    return {
        "label": witness.label,
        "value": witness.value,
        "vnorm_upper": witness.vnorm_upper,
        "operator": matrix_report(witness.operator.matrix),
    }


# ==================== CSV ====================

def csv_row(quantity: str, lower: float, upper: float, notes: str = "") -> Dict[str, Any]:
    return {"quantity": quantity, "lower": lower, "upper": upper, "notes": notes}


def write_csv(rows: Sequence[Dict[str, Any]], path: str) -> None:
    """One row per scalar result with header quantity,lower,upper,notes."""
    frame = pd.DataFrame(list(rows), columns=CSV_COLUMNS)
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Wrote {len(frame)} CSV rows to '{path}'")
