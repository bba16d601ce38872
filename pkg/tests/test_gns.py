import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modmark.algebra import (
    AlgebraElement,
    BlockAlgebra,
    FaithfulState,
    evaluate_state,
    random_element,
)
from modmark.errors import BadQuadrature, PowerRangeExceeded, ShapeMismatch
from modmark.gns import GnsVector, ModularData, left_act, right_act
from modmark.generators import random_faithful_state

M2 = BlockAlgebra((2,))


@pytest.fixture
def md():
    return ModularData(FaithfulState(AlgebraElement(M2, [np.diag([2 / 3, 1 / 3])])))


def unit(alg, k, a, b):
    blocks = [np.zeros((n, n), dtype=complex) for n in alg.block_dims]
    blocks[k][a, b] = 1.0
    return AlgebraElement(alg, blocks)


def rand_vector(alg, seed):
    v = GnsVector(alg, random_element(alg, seed).blocks)
    return v * (1.0 / v.norm())


class TestEmbed:
    def test_identity_embeds_to_omega(self, md):
        xi = md.embed(M2.identity())
        assert np.allclose(xi.blocks[0], np.diag([math.sqrt(2 / 3), math.sqrt(1 / 3)]))
        assert (xi - md.omega).norm() <= 1e-15
        assert md.omega.norm() == pytest.approx(1.0)

    def test_unit_embeds_scaled(self, md):
        xi = md.embed(unit(M2, 0, 0, 1))
        expected = np.zeros((2, 2), dtype=complex)
        expected[0, 1] = math.sqrt(1 / 3)
        assert np.allclose(xi.blocks[0], expected)

    def test_inner_product_matches_state(self, md):
        e11 = unit(M2, 0, 0, 0)
        value = md.embed(e11).inner(md.embed(e11))
        assert value == pytest.approx(2 / 3)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 5000))
    def test_embedding_is_gns_inner_product(self, seed):
        state = random_faithful_state(BlockAlgebra((2, 2)), seed, 0.05)
        md = ModularData(state)
        x = random_element(state.parent, seed + 1)
        y = random_element(state.parent, seed + 2)
        lhs = md.embed(x).inner(md.embed(y))
        rhs = evaluate_state(state, y.adjoint() @ x)
        assert lhs == pytest.approx(rhs, abs=1e-12)


class TestActions:
    def test_left_action_on_units(self, md):
        c = 0.3 - 0.2j
        xi = GnsVector(M2, [c * unit(M2, 0, 1, 0).blocks[0]])
        out = left_act(unit(M2, 0, 0, 1), xi)
        assert np.allclose(out.blocks[0], c * unit(M2, 0, 0, 0).blocks[0])

    def test_right_action_by_identity(self, md):
        xi = rand_vector(M2, 3)
        assert (right_act(M2.identity(), xi) - xi).norm() == 0.0

    def test_left_right_commute(self):
        # derived by direct evaluation of both orders
        alg = BlockAlgebra((2, 2))
        x = random_element(alg, 11)
        y = random_element(alg, 12)
        xi = GnsVector(alg, random_element(alg, 13).blocks)
        lhs = left_act(x, right_act(y, xi))
        rhs = right_act(y, left_act(x, xi))
        assert (lhs - rhs).norm() <= 1e-12 * max(1.0, lhs.norm())


class TestModularOperators:
    def test_s_sends_embedded_to_adjoint_embedded(self, md):
        xi = md.apply_S(md.embed(unit(M2, 0, 0, 1)))
        assert (xi - md.embed(unit(M2, 0, 1, 0))).norm() <= 1e-14

    def test_delta_eigenaction_on_units(self, md):
        # eigenvalue ratio (2/3)/(1/3) = 2 on the E12 coordinate
        e12 = GnsVector(M2, [unit(M2, 0, 0, 1).blocks[0]])
        e21 = GnsVector(M2, [unit(M2, 0, 1, 0).blocks[0]])
        assert (md.delta_power(1.0, e12) - 2.0 * e12).norm() <= 1e-14
        assert (md.delta_power(1.0, e21) - 0.5 * e21).norm() <= 1e-14

    def test_omega_fixed_by_flow_and_j(self, md):
        assert (md.apply_J(md.omega) - md.omega).norm() <= 1e-15
        for t in (-1.0, 0.3, 5.0):
            assert (md.delta_power(1j * t, md.omega) - md.omega).norm() <= 1e-14

    def test_jdj_is_inverse_both_paths(self):
        # derived: both sides evaluated independently
        state = random_faithful_state(BlockAlgebra((3,)), 5, 0.05)
        md = ModularData(state)
        xi = rand_vector(state.parent, 17)
        lhs = md.apply_J(md.delta_power(1.0, md.apply_J(xi)))
        rhs = md.delta_power(-1.0, xi)
        assert (lhs - rhs).norm() <= 1e-10 * md.kappa

    def test_s_factorizations_agree(self):
        state = random_faithful_state(BlockAlgebra((2, 2)), 9, 0.05)
        md = ModularData(state)
        xi = rand_vector(state.parent, 21)
        a = md.apply_J(md.delta_power(0.5, xi))
        b = md.delta_power(-0.5, md.apply_J(xi))
        assert (a - b).norm() <= 1e-11 * md.kappa
        assert (md.apply_S(xi) - a).norm() == 0.0

    def test_delta_is_s_star_s(self):
        state = random_faithful_state(BlockAlgebra((3,)), 2, 0.05)
        md = ModularData(state)
        xi, eta = rand_vector(state.parent, 31), rand_vector(state.parent, 32)
        lhs = md.delta_power(1.0, xi).inner(eta)
        rhs = md.apply_S(eta).inner(md.apply_S(xi))
        assert lhs == pytest.approx(rhs, abs=1e-10 * md.kappa)

    def test_j_involution_and_antiunitarity(self, md):
        xi, eta = rand_vector(M2, 41), rand_vector(M2, 42)
        assert (md.apply_J(md.apply_J(xi)) - xi).norm() == 0.0
        assert md.apply_J(xi).inner(md.apply_J(eta)) == pytest.approx(
            eta.inner(xi), abs=1e-13)

    def test_power_range_guard(self, md):
        xi = rand_vector(M2, 1)
        with pytest.raises(PowerRangeExceeded):
            md.delta_power(2.5, xi)
        loose = ModularData(md.state, z_max=3.0)
        loose.delta_power(2.5, xi)  # within the configured range

    def test_shape_guards(self, md):
        other = rand_vector(BlockAlgebra((3,)), 1)
        with pytest.raises(ShapeMismatch):
            md.delta_power(0.5, other)
        with pytest.raises(ShapeMismatch):
            md.embed(random_element(BlockAlgebra((3,)), 1))


class TestModularFlow:
    def test_diagonal_fixed_points(self, md):
        x = AlgebraElement(M2, [np.diag([0.7, -0.1])])
        for t in (0.5, -2.0):
            assert (md.modular_flow(t, x) - x).norm() <= 1e-14

    def test_unit_is_eigenoperator(self, md):
        # sigma_t(E12) = exp(i t ln 2) E12
        e12 = unit(M2, 0, 0, 1)
        for t in (0.7, -1.3):
            got = md.modular_flow(t, e12)
            phase = np.exp(1j * t * math.log(2.0))
            assert np.allclose(got.blocks[0], phase * e12.blocks[0], atol=1e-14)

    def test_state_invariance(self):
        # derived by direct evaluation
        state = random_faithful_state(BlockAlgebra((2, 2)), 8, 0.05)
        md = ModularData(state)
        x = random_element(state.parent, 3, "hermitian")
        lhs = evaluate_state(state, md.modular_flow(0.7, x))
        rhs = evaluate_state(state, x)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))

    def test_group_property_and_star(self):
        state = random_faithful_state(BlockAlgebra((3,)), 4, 0.05)
        md = ModularData(state)
        x = random_element(state.parent, 6)
        s, t = 0.4, -1.1
        lhs = md.modular_flow(s, md.modular_flow(t, x))
        rhs = md.modular_flow(s + t, x)
        assert (lhs - rhs).norm() <= 1e-12 * max(1.0, x.norm())
        assert (md.modular_flow(0.0, x) - x).norm() <= 1e-13
        assert (md.modular_flow(t, x.adjoint())
                - md.modular_flow(t, x).adjoint()).norm() <= 1e-12

    def test_flow_matches_embedded_power(self, md):
        x = random_element(M2, 19)
        for t in (0.3, -2.2):
            lhs = md.embed(md.modular_flow(t, x))
            rhs = md.delta_power(1j * t, md.embed(x))
            assert (lhs - rhs).norm() <= 1e-13 * max(1.0, x.norm())


class TestModularSmear:
    def test_fixed_point_returns_kernel_mass(self, md):
        x = AlgebraElement(M2, [np.diag([1.0, -0.5])])

        def f(t):
            return math.exp(-t * t / 2.0) / math.sqrt(2.0 * math.pi)

        out = md.modular_smear(x, f, half_width=8.0, step=0.05)
        ts = np.linspace(-8.0, 8.0, int(round(16.0 / 0.05)) + 1)
        mass = float(np.trapezoid([f(t) for t in ts], ts))
        assert (out - mass * x).norm() <= 1e-12

    def test_zero_kernel(self, md):
        out = md.modular_smear(random_element(M2, 2), lambda t: 0.0, 1.0, 0.01)
        assert out.norm() == 0.0

    def test_gaussian_against_characteristic_function_oracle(self, md):
        # closed form: integral of the unit Gaussian against exp(i t w)
        # is exp(-w^2 / 2); here the E12 coordinate oscillates at w = ln 2
        x = unit(M2, 0, 0, 1)

        def f(t):
            return math.exp(-t * t / 2.0) / math.sqrt(2.0 * math.pi)

        out = md.modular_smear(x, f, half_width=10.0, step=0.02)
        expected = math.exp(-math.log(2.0) ** 2 / 2.0)
        assert abs(out.blocks[0][0, 1] - expected) <= 1e-9
        assert abs(out.blocks[0][1, 0]) <= 1e-15

    def test_bad_quadrature(self, md):
        x = random_element(M2, 1)
        with pytest.raises(BadQuadrature):
            md.modular_smear(x, lambda t: 1.0, half_width=1.0, step=1.5)
        with pytest.raises(BadQuadrature):
            md.modular_smear(x, lambda t: float("nan"), half_width=1.0, step=0.1)
        with pytest.raises(BadQuadrature):
            md.modular_smear(x, lambda t: 1.0, half_width=-1.0, step=0.1)


class TestAnalyticVectorCheck:
    def test_omega_single_imaginary_samples(self, md):
        report = md.analytic_vector_check(md.omega, [1j, -0.5j, 2j])
        assert report.max_residual <= 1e-13
        assert report.passed

    def test_imaginary_group_law(self, md):
        xi = rand_vector(M2, 5)
        report = md.analytic_vector_check(xi, [0.25j, 1j, -3j])
        assert report.boundary_residual <= 1e-12
        assert report.passed

    def test_mixed_samples(self):
        state = random_faithful_state(BlockAlgebra((2, 2)), 14, 0.05)
        md = ModularData(state)
        xi = rand_vector(state.parent, 77)
        report = md.analytic_vector_check(xi, [0.5, -0.25 + 2j])
        assert report.pairs_checked == 4
        assert report.passed

    def test_out_of_range_sample(self, md):
        with pytest.raises(PowerRangeExceeded):
            md.analytic_vector_check(rand_vector(M2, 6), [3.0])
