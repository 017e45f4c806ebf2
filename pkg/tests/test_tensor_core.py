import math

import numpy as np
import pytest

from constants import MAX_TOTAL_DIM
from tensor_core import (
    DensityOperator,
    HermitianOperator,
    ProductVector,
    PureState,
    SpaceShape,
    apply_local,
    bipartition_matrix,
    bipartitions,
    expand_product,
    flatten_index,
    matricize,
    partial_trace_last,
    partial_transpose,
    product_density,
    pure_density,
    random_density,
    random_product,
    random_state,
    random_unitary,
    standard_state,
    trace_norm,
    unflatten_index,
    werner_state,
)
from utils import BoundsError, InvariantError, ShapeError


class TestSpaceShape:
    def test_properties(self):
        shape = SpaceShape((2, 3, 6))
        assert shape.num_slots == 3
        assert shape.total_dim == 36
        assert shape.left_dim == 6
        assert str(shape) == "(2,3,6)"

    def test_rejects_single_slot_and_zero_dims(self):
        with pytest.raises(ShapeError):
            SpaceShape((4,))
        with pytest.raises(ShapeError):
            SpaceShape((2, 0))

    def test_reduced_shape_allows_one_slot(self):
        assert SpaceShape((4,), reduced=True).total_dim == 4

    def test_dense_cap(self):
        with pytest.raises(ShapeError):
            SpaceShape((2 ** 11, 2 ** 10))
        assert SpaceShape((2 ** 10, 2 ** 10)).total_dim == MAX_TOTAL_DIM

    def test_normalized_and_coarsened(self):
        shape = SpaceShape((6, 2, 3))
        assert shape.normalized().dims == (2, 3, 6)
        assert SpaceShape((2, 2, 4)).coarsened().dims == (4, 4)


class TestIndexing:
    def test_last_slot_fastest(self):
        shape = SpaceShape((2, 3))
        assert flatten_index(shape, (0, 1)) == 1
        assert flatten_index(shape, (1, 0)) == 3

    def test_unflatten_inverts_flatten(self):
        shape = SpaceShape((2, 3, 4))
        for flat in range(shape.total_dim):
            assert flatten_index(shape, unflatten_index(shape, flat)) == flat

    def test_out_of_range(self):
        shape = SpaceShape((2, 3))
        with pytest.raises(BoundsError):
            flatten_index(shape, (2, 0))
        with pytest.raises(BoundsError):
            unflatten_index(shape, 6)

    def test_matricize_split_bounds(self, ghz3):
        with pytest.raises(BoundsError):
            matricize(ghz3, 0)
        with pytest.raises(BoundsError):
            matricize(ghz3, 3)

    def test_matricize_preserves_frobenius_norm(self):
        state = random_state(SpaceShape((2, 3, 4)), 3)
        for split in (1, 2):
            assert np.linalg.norm(matricize(state, split)) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("dims", [(2, 3), (2, 2, 3), (3, 2, 2, 2)])
    def test_matricize_preserves_inner_products(self, dims):
        shape = SpaceShape(dims)
        for seed in range(0, 100, 3):
            a, b = random_state(shape, seed), random_state(shape, seed + 1)
            for split in range(1, shape.num_slots):
                matrix_inner = np.vdot(matricize(b, split).ravel(), matricize(a, split).ravel())
                assert matrix_inner == pytest.approx(a.inner(b), abs=1e-12)

    def test_bipartition_matrix_matches_transposed_tensor(self):
        state = random_state(SpaceShape((2, 3, 4)), 5)
        matrix = bipartition_matrix(state.amplitudes, state.dims, (0, 2))
        assert matrix.shape == (8, 3)
        assert matrix[1 * 4 + 2, 1] == pytest.approx(state.tensor[1, 1, 2])

    def test_bipartition_counts(self):
        assert len(bipartitions(3)) == 3
        assert len(bipartitions(4)) == 7
        assert bipartitions(4, contiguous_only=True) == [(0,), (0, 1), (0, 1, 2)]


class TestValueTypes:
    def test_pure_state_requires_unit_norm(self):
        with pytest.raises(InvariantError):
            PureState(SpaceShape((2, 2)), np.array([1, 1, 0, 0]))

    def test_pure_state_length_mismatch(self):
        with pytest.raises(ShapeError):
            PureState(SpaceShape((2, 2)), np.array([1, 0, 0]))

    def test_amplitudes_read_only(self, bell):
        with pytest.raises(ValueError):
            bell.amplitudes[0] = 0

    def test_inner_is_linear_in_first_argument(self):
        shape = SpaceShape((2, 2))
        a, b = random_state(shape, 1), random_state(shape, 2)
        assert a.inner(b) == pytest.approx(np.vdot(b.amplitudes, a.amplitudes))

    def test_product_vector_expansion(self):
        product = ProductVector((np.array([1, 0]), np.array([0, 1j])))
        state = expand_product(product)
        assert state.amplitudes[1] == pytest.approx(1j)
        assert product.same_up_to_phase(ProductVector((np.array([1j, 0]), np.array([0, 1]))))

    def test_expand_product_shape_mismatch(self):
        with pytest.raises(ShapeError):
            expand_product(random_product(SpaceShape((2, 3)), 0), SpaceShape((3, 2)))

    def test_density_validation(self):
        shape = SpaceShape((2, 2))
        with pytest.raises(InvariantError):
            DensityOperator(shape, np.eye(4))
        with pytest.raises(InvariantError):
            DensityOperator(shape, np.diag([1.5, -0.5, 0, 0]))

    def test_hermitian_operator_norm(self):
        operator = HermitianOperator(SpaceShape((2, 2)), np.diag([1.0, -3.0, 2.0, 0.0]))
        assert operator.operator_norm == pytest.approx(3.0)
        with pytest.raises(InvariantError):
            HermitianOperator(SpaceShape((2, 2)), np.triu(np.ones((4, 4))))


class TestOperators:
    def test_partial_trace_of_bell_is_maximally_mixed(self, bell):
        reduced = partial_trace_last(pure_density(bell))
        assert reduced.shape.reduced
        np.testing.assert_allclose(reduced.matrix, np.eye(2) / 2, atol=1e-12)

    def test_partial_trace_three_slots(self, ghz3):
        reduced = partial_trace_last(pure_density(ghz3))
        assert reduced.shape.dims == (2, 2)
        np.testing.assert_allclose(np.diag(reduced.matrix).real, [0.5, 0, 0, 0.5], atol=1e-12)

    def test_partial_transpose_detects_bell(self):
        smallest = np.linalg.eigvalsh(partial_transpose(werner_state(1.0).matrix, (2, 2), 1))[0]
        assert smallest == pytest.approx(-0.5)

    def test_trace_norm(self):
        assert trace_norm(np.diag([1.0, -2.0])) == pytest.approx(3.0)

    def test_apply_local_preserves_norm(self):
        rng = np.random.default_rng(7)
        state = random_state(SpaceShape((2, 3, 2)), 9)
        moved = apply_local(state, random_unitary(3, rng), 1)
        assert np.linalg.norm(moved.amplitudes) == pytest.approx(1.0, abs=1e-12)

    def test_apply_local_wrong_size(self, bell):
        with pytest.raises(ShapeError):
            apply_local(bell, np.eye(3), 0)

    def test_product_density(self):
        rho = product_density([np.diag([1.0, 0.0]), np.eye(2) / 2])
        assert rho.shape.dims == (2, 2)
        assert np.real(np.trace(rho.matrix)) == pytest.approx(1.0)


class TestRandomAndStandardStates:
    def test_random_state_is_seeded(self):
        shape = SpaceShape((2, 3))
        np.testing.assert_array_equal(random_state(shape, 4).amplitudes, random_state(shape, 4).amplitudes)

    def test_random_state_amplitudes_are_uniform_on_average(self):
        shape = SpaceShape((2, 3))
        weights = np.array([abs(random_state(shape, seed).amplitudes[4]) ** 2 for seed in range(10_000)])
        assert weights.mean() == pytest.approx(1 / shape.total_dim, rel=0.05)

    def test_random_unitary_is_unitary(self):
        u = random_unitary(5, np.random.default_rng(0))
        np.testing.assert_allclose(u.conj().T @ u, np.eye(5), atol=1e-12)

    def test_random_density_rank(self):
        rho = random_density(SpaceShape((2, 2)), 3, rank=1)
        assert np.linalg.matrix_rank(rho.matrix, tol=1e-10) == 1

    def test_ghz_and_w_amplitudes(self, ghz3, w3):
        assert ghz3.amplitudes[0] == pytest.approx(1 / math.sqrt(2))
        assert ghz3.amplitudes[7] == pytest.approx(1 / math.sqrt(2))
        np.testing.assert_allclose(np.abs(w3.amplitudes[[1, 2, 4]]), 1 / math.sqrt(3))

    def test_bell_requires_two_slots(self):
        with pytest.raises(ShapeError):
            standard_state("bell", SpaceShape((2, 2, 2)))

    def test_werner_range(self):
        with pytest.raises(InvariantError):
            werner_state(1.5)
        np.testing.assert_allclose(werner_state(0.0).matrix, np.eye(4) / 4)
