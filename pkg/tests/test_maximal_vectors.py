import math

import numpy as np
import pytest

from maximal_vectors import (
    VERDICT_MAXIMAL,
    VERDICT_NOT_MAXIMAL,
    VERDICT_UNKNOWN,
    MaximalForm,
    closed_form_inner_radius,
    connect_maximal,
    connection_residual,
    is_maximal,
    make_maximal,
    purification_check,
    refinement_agreement,
    require_maximal_shape,
)
from tensor_core import SpaceShape, apply_local, random_state, random_unitary
from utils import InvariantError, PreconditionError, ShapeError, UnsupportedShapeError


class TestShapes:
    def test_require_maximal_shape(self):
        assert require_maximal_shape(SpaceShape((2, 2, 4))) == 4
        with pytest.raises(UnsupportedShapeError, match="n_N >= n_1"):
            require_maximal_shape(SpaceShape((2, 2, 2)))

    @pytest.mark.parametrize("dims, expected", [
        ((2, 2), 1 / math.sqrt(2)),
        ((2, 3, 6), 1 / math.sqrt(6)),
        ((6, 3, 2), 1 / math.sqrt(6)),
        ((2, 2, 2), None),
    ])
    def test_closed_form_inner_radius(self, dims, expected):
        value = closed_form_inner_radius(SpaceShape(dims))
        if expected is None:
            assert value is None
        else:
            assert value == pytest.approx(expected)


class TestConstruction:
    def test_canonical_two_qubits_is_bell(self, bell):
        state = make_maximal(SpaceShape((2, 2)), canonical=True)
        np.testing.assert_allclose(state.amplitudes, bell.amplitudes, atol=1e-15)

    def test_form_validation(self):
        shape = SpaceShape((2, 2))
        with pytest.raises(ShapeError):
            MaximalForm(shape, np.eye(3), np.eye(2))
        with pytest.raises(InvariantError):
            MaximalForm(shape, 2 * np.eye(2), np.eye(2))

    @pytest.mark.parametrize("dims", [(2, 2), (2, 4), (2, 2, 4), (2, 3, 6)])
    def test_random_maximal_vectors_purify_the_identity(self, dims):
        for seed in range(3):
            result = purification_check(make_maximal(SpaceShape(dims), seed))
            assert result.passes
            assert result.deviation <= 1e-10

    def test_random_state_fails_purification(self):
        assert not purification_check(random_state(SpaceShape((2, 2, 4)), 0)).passes


class TestMaximality:
    @pytest.mark.parametrize("dims", [(2, 2), (2, 2, 4)])
    def test_maximal_vector_extremal_everywhere(self, dims, opts):
        shape = SpaceShape(dims)
        m = shape.left_dim
        verdict = is_maximal(make_maximal(shape, 5), opts)
        assert verdict.verdict == VERDICT_MAXIMAL
        assert verdict.all_extremal
        assert verdict.injective.upper == pytest.approx(1 / math.sqrt(m), abs=1e-8)
        assert verdict.projective.lower == pytest.approx(math.sqrt(m), abs=1e-6)
        assert verdict.distance.lower == pytest.approx(math.sqrt(2 * (1 - 1 / math.sqrt(m))), abs=1e-6)

    def test_local_unitary_image_stays_maximal(self, opts):
        state = make_maximal(SpaceShape((2, 2, 4)), 2)
        rng = np.random.default_rng(3)
        for slot, dim in enumerate(state.dims):
            state = apply_local(state, random_unitary(dim, rng), slot)
        assert is_maximal(state, opts).all_extremal

    def test_random_state_is_not_maximal(self, opts):
        verdict = is_maximal(random_state(SpaceShape((2, 2, 4)), 12), opts)
        assert verdict.verdict == VERDICT_NOT_MAXIMAL
        assert verdict.none_extremal

    def test_unknown_inner_radius(self, ghz3, opts):
        verdict = is_maximal(ghz3, opts)
        assert verdict.verdict == VERDICT_UNKNOWN
        assert verdict.inner_radius is None

    def test_refinement_agreement(self, opts):
        shape = SpaceShape((2, 2, 4))
        assert refinement_agreement(make_maximal(shape, 1), opts).agree
        assert refinement_agreement(random_state(shape, 1), opts).agree


class TestConnection:
    @pytest.mark.parametrize("dims", [(2, 2), (2, 3), (2, 2, 4), (2, 2, 5)])
    def test_connects_two_maximal_vectors(self, dims):
        shape = SpaceShape(dims)
        first, second = make_maximal(shape, 1), make_maximal(shape, 2)
        unitary = connect_maximal(first, second)
        residual, defect = connection_residual(first, second, unitary)
        assert residual <= 1e-8
        assert defect <= 1e-10

    def test_rejects_non_maximal_input(self):
        shape = SpaceShape((2, 2, 4))
        with pytest.raises(PreconditionError):
            connect_maximal(make_maximal(shape, 1), random_state(shape, 1))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ShapeError):
            connect_maximal(make_maximal(SpaceShape((2, 2)), 1), make_maximal(SpaceShape((2, 3)), 1))
