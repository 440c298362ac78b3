import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from formevol import (
    HermitianForm,
    NotHermitianError,
    NotPositiveDefiniteError,
    Semibound,
    SemiboundError,
    form_operator_norm,
    graph_norm,
    represent_form,
    semibound_of,
)
from formevol.models import CircleDeltaModel, alpha_profile

from helpers import random_hermitian, random_unit_vector


class TestRepresentation:
    def test_identity_form(self):
        rep = represent_form(HermitianForm(np.eye(3)))
        assert np.array_equal(rep.T, np.eye(3))

    def test_diagonal_form(self):
        G = np.diag([0.0, 1.0, 4.0])
        rep = represent_form(G)
        assert np.array_equal(rep.T, G.astype(complex))

    def test_basis_pair_roundtrip_random(self):
        rng = np.random.default_rng(42)
        G = random_hermitian(rng, 5)
        form = HermitianForm(G)
        rep = represent_form(form)
        basis = np.eye(5, dtype=complex)
        worst = max(
            abs(rep.expectation(basis[j], basis[k]) - form.value(basis[j], basis[k]))
            for j in range(5)
            for k in range(5)
        )
        assert worst < 1e-12

    def test_representing_operator_is_hermitian(self):
        rng = np.random.default_rng(3)
        rep = represent_form(random_hermitian(rng, 6))
        assert np.max(np.abs(rep.T - rep.T.conj().T)) < 1e-13

    def test_rejects_asymmetric_input(self):
        G = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(NotHermitianError) as err:
            represent_form(G)
        assert err.value.max_asymmetry == pytest.approx(2.0)

    def test_quadratic_form_real_on_random_vectors(self):
        rng = np.random.default_rng(7)
        form = HermitianForm(random_hermitian(rng, 4))
        for _ in range(20):
            v = random_unit_vector(rng, 4)
            assert abs(np.imag(form.value(v, v))) < 1e-13


class TestSemibound:
    def test_positive_form(self):
        assert semibound_of(HermitianForm(np.diag([1.0, 2.0]))).m == 0.0

    def test_diagonal_readoff(self):
        assert semibound_of(HermitianForm(np.diag([-3.0, 1.0]))).m == pytest.approx(3.0)

    def test_circle_delta_matches_dense_eigensolver(self):
        model = CircleDeltaModel(16, alpha_profile("constant", value=-10.0), 1.0)
        H = model.matrix(0.0)
        m = semibound_of(HermitianForm(H)).m
        lam_min = float(np.linalg.eigvalsh(H)[0])
        assert m == pytest.approx(-lam_min, abs=1e-12)
        assert m > 0


class TestGraphNorm:
    def test_reduces_to_vector_norm(self):
        form = HermitianForm(np.zeros((2, 2)))
        v = np.array([1.0, 0.0])
        assert graph_norm(form, Semibound(0.0), v) == pytest.approx(1.0)

    def test_scalar_example(self):
        form = HermitianForm(np.diag([3.0]))
        assert graph_norm(form, 0.0, np.array([1.0])) == pytest.approx(2.0)

    def test_semibound_saturation(self):
        form = HermitianForm(np.diag([-3.0, 1.0]))
        v = np.array([1.0, 0.0])
        assert graph_norm(form, Semibound(3.0), v) == pytest.approx(1.0)

    def test_invalid_semibound_raises(self):
        form = HermitianForm(np.diag([-3.0]))
        with pytest.raises(SemiboundError):
            graph_norm(form, 0.0, np.array([1.0]))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=2, max_value=6), st.integers(min_value=0, max_value=2**31 - 1))
    def test_dominates_vector_norm(self, n, seed):
        rng = np.random.default_rng(seed)
        form = HermitianForm(random_hermitian(rng, n))
        m = semibound_of(form)
        v = random_unit_vector(rng, n) * rng.uniform(0.1, 3.0)
        assert graph_norm(form, m, v) >= np.linalg.norm(v) - 1e-12


class TestFormOperatorNorm:
    def test_v_equals_a0(self):
        rng = np.random.default_rng(11)
        H = random_hermitian(rng, 4)
        A0 = H @ H.conj().T + np.eye(4)
        assert form_operator_norm(A0, A0) == pytest.approx(1.0, abs=1e-12)

    def test_zero(self):
        assert form_operator_norm(np.zeros((3, 3)), np.eye(3)) == 0.0

    def test_dominates_sampled_ratios_and_is_attained(self):
        rng = np.random.default_rng(23)
        n = 4
        V = random_hermitian(rng, n)
        B = random_hermitian(rng, n)
        A0 = B @ B.conj().T + np.eye(n)
        norm = form_operator_norm(V, A0)

        # sampling oracle: no ratio may exceed the closed form
        psi = rng.standard_normal((10_000, n)) + 1j * rng.standard_normal((10_000, n))
        phi = rng.standard_normal((10_000, n)) + 1j * rng.standard_normal((10_000, n))
        num = np.abs(np.einsum("sa,ab,sb->s", psi.conj(), V, phi))
        den = np.sqrt(
            np.real(np.einsum("sa,ab,sb->s", psi.conj(), A0, psi))
            * np.real(np.einsum("sa,ab,sb->s", phi.conj(), A0, phi))
        )
        assert np.all(num <= norm * den * (1.0 + 1e-12))

        # extremal vector attains the supremum
        w, Q = np.linalg.eigh(A0)
        inv_sqrt = (Q * w**-0.5) @ Q.conj().T
        S = inv_sqrt @ V @ inv_sqrt
        ws, Qs = np.linalg.eigh(0.5 * (S + S.conj().T))
        u = Qs[:, int(np.argmax(np.abs(ws)))]
        x = inv_sqrt @ u
        attained = abs(x.conj() @ V @ x) / np.real(x.conj() @ A0 @ x)
        assert attained == pytest.approx(norm, abs=1e-8)

    def test_homogeneous_and_sign_invariant(self):
        rng = np.random.default_rng(5)
        V = random_hermitian(rng, 5)
        B = random_hermitian(rng, 5)
        A0 = B @ B.conj().T + np.eye(5)
        base = form_operator_norm(V, A0)
        assert form_operator_norm(-V, A0) == pytest.approx(base, rel=1e-13)
        assert form_operator_norm(2.5 * V, A0) == pytest.approx(2.5 * base, rel=1e-12)

    def test_rejects_indefinite_weight(self):
        with pytest.raises(NotPositiveDefiniteError) as err:
            form_operator_norm(np.eye(2), np.diag([1.0, -2.0]))
        assert err.value.lambda_min == pytest.approx(-2.0)
