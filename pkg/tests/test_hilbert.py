import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from enhcircle.errors import AliasingWarning
from enhcircle.hilbert import (
    SQRT_2PI,
    GridFunction,
    ModeVector,
    analyze,
    apply_exp_ipQ,
    apply_P,
    apply_Q,
    exact_position_moment,
    inner_product,
    make_grid,
    mode_function,
    position_kernel,
    synthesize,
    translate_modes,
)

alphas = st.sampled_from([0.0, 0.25, 0.5, 0.9])


def random_modes(alpha, n_max, seed, band=None):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=2 * n_max + 1) + 1j * rng.normal(size=2 * n_max + 1)
    if band is not None:
        c[np.abs(np.arange(-n_max, n_max + 1)) > band] = 0
    return ModeVector(alpha, n_max, c)


class TestGrid:
    def test_m8(self):
        g = make_grid(8)
        assert g.theta[0] == -math.pi
        assert g.spacing == pytest.approx(math.pi / 4)
        assert g.weight == pytest.approx(math.pi / 4)

    def test_m1(self):
        g = make_grid(1)
        np.testing.assert_allclose(g.theta, [-math.pi])
        assert g.weight == pytest.approx(2 * math.pi)

    def test_m0_rejected(self):
        with pytest.raises(ValueError):
            make_grid(0)

    def test_right_endpoint_excluded(self):
        g = make_grid(16)
        assert g.theta[-1] < math.pi


class TestInnerProduct:
    @pytest.mark.parametrize("M", [1, 2, 7, 64])
    def test_constant(self, M):
        g = make_grid(M)
        f = GridFunction(g, np.full(M, 1 / SQRT_2PI))
        assert inner_product(f, f) == pytest.approx(1.0, abs=1e-14)

    def test_distinct_modes_orthogonal(self):
        g = make_grid(16)
        assert abs(inner_product(mode_function(0, 0.5, g), mode_function(1, 0.5, g))) < 1e-12

    def test_linearity(self):
        g = make_grid(32)
        f, h = mode_function(2, 0.25, g), mode_function(2, 0.25, g) + mode_function(-1, 0.25, g)
        a = 0.3 - 1.7j
        assert inner_product(f, h * a) == pytest.approx(a * inner_product(f, h), abs=1e-13)

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            inner_product(mode_function(0, 0, make_grid(8)), mode_function(0, 0, make_grid(16)))

    @pytest.mark.parametrize("alpha", [0.0, 0.25, 0.9])
    def test_orthonormality(self, alpha):
        n_max = 10
        g = make_grid(2 * n_max + 2)
        modes = [mode_function(n, alpha, g) for n in range(-n_max, n_max + 1)]
        gram = np.array([[inner_product(a, b) for b in modes] for a in modes])
        np.testing.assert_allclose(gram, np.eye(len(modes)), atol=1e-12)


class TestAnalyzeSynthesize:
    @pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5])
    def test_single_mode(self, alpha):
        g = make_grid(32)
        v = analyze(mode_function(3, alpha, g), alpha, 12)
        expected = ModeVector.unit(3, alpha, 12).coeffs
        np.testing.assert_allclose(v.coeffs, expected, atol=1e-12)

    def test_zero(self):
        g = make_grid(16)
        v = analyze(GridFunction(g, np.zeros(16, complex)), 0.3, 5)
        assert np.all(v.coeffs == 0)

    def test_round_trip_mode(self):
        g = make_grid(24)
        f = mode_function(-2, 0.7, g)
        back = synthesize(analyze(f, 0.7, 8), g)
        np.testing.assert_allclose(back.values, f.values, atol=1e-12)

    def test_alpha_zero_is_fourier_series(self):
        g = make_grid(32)
        v = ModeVector(0.0, 2, np.array([0, 1, 1, 2, 3j], dtype=complex))
        th = g.theta
        ref = (np.exp(-1j * th) + 1 + 2 * np.exp(1j * th) + 3j * np.exp(2j * th)) / SQRT_2PI
        np.testing.assert_allclose(synthesize(v, g).values, ref, atol=1e-13)

    def test_mode_zero_value_at_origin(self):
        v = ModeVector.unit(0, 0.25, 4)
        assert v.evaluate(0.0) == pytest.approx(1 / SQRT_2PI, abs=1e-15)

    def test_aliasing_warning(self):
        g = make_grid(8)
        with pytest.warns(AliasingWarning):
            analyze(mode_function(0, 0, g), 0, 8)

    @settings(max_examples=30, deadline=None)
    @given(alpha=alphas, seed=st.integers(0, 10_000), band=st.integers(0, 15))
    def test_parseval(self, alpha, seed, band):
        g = make_grid(32)
        v = random_modes(alpha, 15, seed, band)
        f = synthesize(v, g)
        assert f.norm() ** 2 == pytest.approx(v.norm() ** 2, rel=1e-12)
        np.testing.assert_allclose(analyze(f, alpha, 15).coeffs, v.coeffs, atol=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(alpha=alphas, seed=st.integers(0, 10_000))
    def test_twisted_boundary(self, alpha, seed):
        v = random_modes(alpha, 6, seed)
        eps = 1e-9
        left, right = v.evaluate(np.array([-math.pi, math.pi - eps]))
        assert right == pytest.approx(np.exp(2j * math.pi * alpha) * left, abs=1e-7 * max(1, abs(left)))


class TestPositionOperators:
    def test_constant_times_theta(self):
        g = make_grid(16)
        f = GridFunction(g, np.ones(16, complex))
        Qf = apply_Q(f).values
        np.testing.assert_allclose(Qf[1:], g.theta[1:])
        # the seam sample carries the midpoint of the jump
        assert Qf[0] == 0.0

    def test_even_density_zero_mean(self):
        g = make_grid(64)
        f = GridFunction(g, (1 + 0.3 * np.cos(g.theta)) ** 3 + 0j)
        assert abs(inner_product(f, apply_Q(f))) < 1e-13

    def test_q_twice(self):
        g = make_grid(16)
        f = mode_function(1, 0.2, g)
        QQ = apply_Q(apply_Q(f)).values
        np.testing.assert_allclose(QQ[1:], (g.theta**2 * f.values)[1:], atol=1e-14)

    def test_boost_identity(self):
        g = make_grid(16)
        f = mode_function(1, 0.2, g)
        np.testing.assert_allclose(apply_exp_ipQ(f, 0.0, 1.0).values, f.values)

    @settings(max_examples=25, deadline=None)
    @given(p=st.floats(-20, 20), hbar=st.floats(0.05, 3))
    def test_boost_unitary(self, p, hbar):
        g = make_grid(32)
        f = synthesize(random_modes(0.25, 8, 3), g)
        assert apply_exp_ipQ(f, p, hbar).norm() == pytest.approx(f.norm(), rel=1e-13)

    @pytest.mark.parametrize("m", [-3, 1, 4])
    def test_integer_boost_shifts_modes(self, m):
        hbar = 0.5
        g = make_grid(32)
        out = analyze(apply_exp_ipQ(mode_function(2, 0.25, g), hbar * m, hbar), 0.25, 12)
        np.testing.assert_allclose(out.coeffs, ModeVector.unit(2 + m, 0.25, 12).coeffs, atol=1e-12)

    def test_position_kernel_values(self):
        j = np.array([0, 1, 2])
        np.testing.assert_allclose(position_kernel(j, 1), [0, 1j, -0.5j])
        np.testing.assert_allclose(position_kernel(j, 2), [math.pi**2 / 3, -2, 0.5])

    def test_exact_moment_flat(self):
        v = ModeVector.unit(0, 0.4, 3)
        assert exact_position_moment(v, 1) == pytest.approx(0.0, abs=1e-15)
        assert exact_position_moment(v, 2) == pytest.approx(math.pi**2 / 3)


class TestMomentumOperators:
    def test_eigenvalue(self):
        v = apply_P(ModeVector.unit(3, 0.25, 5), 1.0)
        assert v.coefficient(3) == pytest.approx(3.25)

    def test_zero_mode(self):
        assert apply_P(ModeVector.unit(0, 0.0, 2), 1.0).norm() == 0.0

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 1000), a=st.complex_numbers(max_magnitude=10), hbar=st.floats(0.1, 2))
    def test_linear(self, seed, a, hbar):
        u, w = random_modes(0.3, 5, seed), random_modes(0.3, 5, seed + 1)
        lhs = apply_P(u * a + w, hbar).coeffs
        rhs = (apply_P(u, hbar) * a + apply_P(w, hbar)).coeffs
        np.testing.assert_allclose(lhs, rhs, atol=1e-10 * (1 + abs(a)))

    @pytest.mark.parametrize("n", [-4, 0, 7])
    def test_eigen_relation_exact(self, n):
        v = ModeVector.unit(n, 0.9, 8)
        np.testing.assert_array_equal(apply_P(v, 0.7).coeffs, (v * (0.7 * (n + 0.9))).coeffs)


class TestTranslate:
    def test_zero(self):
        v = random_modes(0.25, 4, 1)
        np.testing.assert_allclose(translate_modes(v, 0.0).coeffs, v.coeffs)

    @pytest.mark.parametrize("alpha", [0.0, 0.25, 0.9])
    def test_full_turn_global_phase(self, alpha):
        v = random_modes(alpha, 4, 2)
        out = translate_modes(v, 2 * math.pi).coeffs
        np.testing.assert_allclose(out, np.exp(-2j * math.pi * alpha) * v.coeffs, atol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(q1=st.floats(-10, 10), q2=st.floats(-10, 10))
    def test_composition_and_unitarity(self, q1, q2):
        v = random_modes(0.25, 6, 5)
        a = translate_modes(translate_modes(v, q1), q2).coeffs
        b = translate_modes(v, q1 + q2).coeffs
        np.testing.assert_allclose(a, b, atol=1e-11)
        assert translate_modes(v, q1).norm() == pytest.approx(v.norm(), rel=1e-14)

    def test_translation_moves_function(self):
        v = random_modes(0.0, 5, 9)
        q = 0.4
        shifted = translate_modes(v, q)
        th = np.array([0.1, 0.9, -1.3])
        np.testing.assert_allclose(shifted.evaluate(th), v.evaluate(th - q), atol=1e-12)


def q_matrix(n_max):
    n = np.arange(-n_max, n_max + 1)
    return position_kernel(n[None, :] - n[:, None], 1)


class TestCommutatorBoundary:
    @settings(max_examples=20, deadline=None)
    @given(alpha=alphas, seed=st.integers(0, 10_000), hbar=st.floats(0.2, 2))
    def test_boundary_term(self, alpha, seed, hbar):
        # <Qf|Pf> - <Pf|Qf> = i hbar (1 - 2 pi |f(pi)|^2): the canonical relation holds
        # only for states vanishing at the cut
        v = random_modes(alpha, 6, seed)
        v = v * (1 / v.norm())
        c, d = v.coeffs, apply_P(v, hbar).coeffs
        Q = q_matrix(6)
        qp = np.vdot(Q @ c, d)
        comm = qp - np.conj(qp)
        edge = 2 * math.pi * abs(v.evaluate(math.pi)) ** 2
        assert comm == pytest.approx(1j * hbar * (1 - edge), abs=1e-10)

    def test_vanishing_at_cut(self):
        c = np.zeros(5, complex)
        c[1:4] = [0.5, 1.0, 0.5]  # 1 + cos(theta), zero at pi
        v = ModeVector(0.0, 2, c / np.linalg.norm(c))
        qp = np.vdot(q_matrix(2) @ v.coeffs, apply_P(v, 1.0).coeffs)
        assert qp - np.conj(qp) == pytest.approx(1j, abs=1e-12)
