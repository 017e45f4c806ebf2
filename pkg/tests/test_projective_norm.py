import math

import numpy as np
import pytest

from injective_norm import injective_upper, maximize_overlap
from projective_norm import (
    ProductDecomposition,
    hull_membership,
    is_decomposable,
    projective_norm,
    term_budget,
    vector_projective_norm,
)
from tensor_core import SpaceShape, expand_product, matricize, random_product, random_state
from utils import InvariantError, ShapeError


def test_term_budget():
    assert term_budget((2, 2, 4)) == 16
    assert term_budget((4, 2, 2)) == 16


def test_decomposition_cost_and_reconstruction():
    decomposition = ProductDecomposition.from_terms([(2.0, [np.array([1.0, 0.0]), np.array([0.0, 3.0])])])
    assert decomposition.cost == pytest.approx(6.0)
    assert decomposition.num_terms == 1
    np.testing.assert_allclose(decomposition.reconstruct(), [0, 6, 0, 0])


class TestBipartite:
    @pytest.mark.parametrize("dims", [(2, 2), (3, 5), (4, 4)])
    def test_equals_nuclear_norm(self, dims, opts):
        state = random_state(SpaceShape(dims), 17)
        nuclear = np.linalg.svd(matricize(state, 1), compute_uv=False).sum()
        bracket = projective_norm(state, opts)
        assert bracket.lower == pytest.approx(nuclear, abs=1e-10)
        assert bracket.upper == pytest.approx(nuclear, abs=1e-10)
        assert bracket.upper_decomposition.residual_norm(state.amplitudes) <= 1e-9

    def test_generic_path_agrees_on_bell(self, bell, opts):
        bracket = projective_norm(bell, opts, generic=True)
        assert bracket.lower == pytest.approx(math.sqrt(2), abs=1e-8)
        assert bracket.upper == pytest.approx(math.sqrt(2), abs=1e-8)


class TestMultipartite:
    def test_ghz(self, ghz3, opts):
        bracket = projective_norm(ghz3, opts)
        assert bracket.lower == pytest.approx(math.sqrt(2), abs=1e-8)
        assert bracket.upper == pytest.approx(math.sqrt(2), abs=1e-8)

    def test_w_state_bracket(self, w3, opts):
        bracket = projective_norm(w3, opts)
        assert bracket.lower >= 1.4998
        assert bracket.lower <= 1.5 + 1e-9
        assert 1.5 - 1e-9 <= bracket.upper <= math.sqrt(3) + 1e-9

    def test_product_state_has_norm_one(self, opts):
        state = expand_product(random_product(SpaceShape((2, 3, 2)), 2))
        bracket = projective_norm(state, opts)
        assert bracket.lower == pytest.approx(1.0, abs=1e-9)
        assert bracket.upper == pytest.approx(1.0, abs=1e-9)

    def test_decomposition_matches_upper_endpoint(self, opts):
        state = random_state(SpaceShape((2, 2, 2)), 31)
        bracket = projective_norm(state, opts)
        decomposition = bracket.upper_decomposition
        assert decomposition.residual_norm(state.amplitudes) <= 1e-8
        assert decomposition.num_terms <= term_budget(state.dims)
        if "cap" not in bracket.upper_certificate:
            assert decomposition.cost == pytest.approx(bracket.upper, abs=1e-10)
        assert 1.0 <= bracket.lower <= bracket.upper <= 2.0 + 1e-12

    def test_homogeneity(self, ghz3, opts):
        bracket = vector_projective_norm(0.5 * ghz3.amplitudes, ghz3.dims, opts)
        assert bracket.lower == pytest.approx(math.sqrt(2) / 2, abs=1e-8)

    def test_zero_vector_and_length_checks(self, opts):
        with pytest.raises(InvariantError):
            vector_projective_norm(np.zeros(8), (2, 2, 2), opts)
        with pytest.raises(ShapeError):
            vector_projective_norm(np.ones(9), (2, 2, 2), opts)


class TestVerdicts:
    def test_product_is_decomposable(self, opts):
        state = expand_product(random_product(SpaceShape((2, 2, 3)), 6))
        verdict = is_decomposable(state, opts)
        assert verdict.decomposable
        assert verdict.certificate is not None

    def test_ghz_is_not_decomposable(self, ghz3, opts):
        verdict = is_decomposable(ghz3, opts)
        assert not verdict.decomposable
        assert verdict.overlap == pytest.approx(1 / math.sqrt(2), abs=1e-8)

    def test_hull_inside(self, opts):
        state = expand_product(random_product(SpaceShape((2, 2, 2)), 3))
        assert hull_membership(0.5 * state.amplitudes, state.shape, opts).verdict == "inside"

    def test_hull_outside(self, ghz3, opts):
        assert hull_membership(ghz3.amplitudes, ghz3.shape, opts).verdict == "outside"

    def test_hull_zero_vector(self, ghz3, opts):
        verdict = hull_membership(np.zeros(8), ghz3.shape, opts)
        assert verdict.verdict == "inside"
        assert verdict.bracket.upper == 0.0


SHAPES = [(2, 3), (3, 3), (2, 2, 2), (2, 2, 3)]


class TestNormInvariants:
    @pytest.mark.slow
    def test_unit_vectors_sit_between_the_norms(self, opts):
        for seed in range(100):
            state = random_state(SpaceShape(SHAPES[seed % len(SHAPES)]), seed)
            _, overlap, _, _ = maximize_overlap(state.tensor, opts)
            projective = projective_norm(state, opts)
            assert overlap <= 1.0 + 1e-12
            assert projective.upper >= 1.0 - 1e-12
            assert projective.lower >= 1.0 - 1e-12

    @pytest.mark.slow
    def test_pairing_bounded_by_dual_norms(self, opts):
        for seed in range(50):
            shape = SpaceShape(SHAPES[seed % len(SHAPES)])
            xi, eta = random_state(shape, seed), random_state(shape, 1000 + seed)
            pairing = abs(xi.inner(eta))
            bound = injective_upper(xi.amplitudes, xi.dims) * projective_norm(eta, opts).upper
            assert pairing <= bound + 1e-8

    @pytest.mark.parametrize("seed", range(25))
    def test_generic_path_matches_nuclear_norm(self, seed, opts):
        state = random_state(SpaceShape([(2, 2), (2, 3), (3, 4)][seed % 3]), seed)
        nuclear = np.linalg.svd(matricize(state, 1), compute_uv=False).sum()
        bracket = projective_norm(state, opts, generic=True)
        assert bracket.lower == pytest.approx(nuclear, abs=1e-6)
        assert bracket.upper == pytest.approx(nuclear, abs=1e-6)

    @pytest.mark.parametrize("seed", range(25))
    def test_products_have_norm_one(self, seed, opts):
        shape = SpaceShape([(2, 3), (2, 2, 2), (3, 2, 2)][seed % 3])
        bracket = projective_norm(expand_product(random_product(shape, seed)), opts)
        assert bracket.lower == pytest.approx(1.0, abs=1e-8)
        assert bracket.upper == pytest.approx(1.0, abs=1e-8)
