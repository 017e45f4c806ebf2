import numpy as np
import pytest

from utils import (
    InvariantError,
    ShapeError,
    TensorGeometryError,
    UnsupportedShapeError,
    check_density,
    check_hermitian,
    check_unit_norm,
    hermitian_part,
)


def test_error_hierarchy():
    assert issubclass(UnsupportedShapeError, TensorGeometryError)
    assert issubclass(TensorGeometryError, ValueError)


def test_check_unit_norm_reports_value():
    assert check_unit_norm(np.array([0.6, 0.8])) == pytest.approx(1.0)
    with pytest.raises(InvariantError, match="1.41421"):
        check_unit_norm(np.array([1.0, 1.0]))
    with pytest.raises(InvariantError, match="non-finite"):
        check_unit_norm(np.array([np.nan, 0.0]))


def test_check_hermitian():
    check_hermitian(np.array([[1, 1j], [-1j, 2]]))
    with pytest.raises(InvariantError):
        check_hermitian(np.array([[1, 1j], [1j, 2]]))
    with pytest.raises(ShapeError):
        check_hermitian(np.ones((2, 3)))


def test_check_density_returns_trace_and_smallest_eigenvalue():
    trace, smallest = check_density(np.diag([0.75, 0.25]))
    assert trace == pytest.approx(1.0)
    assert smallest == pytest.approx(0.25)


def test_hermitian_part():
    matrix = np.array([[1, 2], [0, 1]], dtype=complex)
    np.testing.assert_allclose(hermitian_part(matrix), [[1, 1], [1, 1]])
