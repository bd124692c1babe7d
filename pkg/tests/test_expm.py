import math

import numpy as np
import pytest

from spinmagnus import spinalg
from spinmagnus.errors import ExpmError
from spinmagnus.expm import (PadeParams, krylov_error_bound,
                             krylov_expm_action, lanczos, op_norm_inf, pade_backward_bound,
                             pade_expm, pade_expm_auto, pade_select_params, taylor_expm,
                             taylor_remainder_bound, taylor_terms_for)
from spinmagnus.spinalg import pauli

from conftest import expm_eig_oracle, random_hermitian, random_skew_hermitian

SX = pauli("x")

# (norm, eps) -> (q, j) over the full published parameter grid
PADE_TABLE = {
    (1e-2, 1e-3): (1, 0), (1e-2, 1e-6): (1, 0), (1e-2, 1e-9): (2, 0),
    (1e-2, 1e-12): (3, 0), (1e-2, 1e-15): (3, 0),
    (1e-1, 1e-3): (1, 0), (1e-1, 1e-6): (2, 0), (1e-1, 1e-9): (3, 0),
    (1e-1, 1e-12): (4, 0), (1e-1, 1e-15): (4, 0),
    (1e0, 1e-3): (2, 1), (1e0, 1e-6): (3, 1), (1e0, 1e-9): (4, 1),
    (1e0, 1e-12): (5, 1), (1e0, 1e-15): (6, 1),
    (1e1, 1e-3): (2, 5), (1e1, 1e-6): (3, 5), (1e1, 1e-9): (4, 5),
    (1e1, 1e-12): (5, 5), (1e1, 1e-15): (6, 5),
    (1e2, 1e-3): (2, 8), (1e2, 1e-6): (3, 8), (1e2, 1e-9): (4, 8),
    (1e2, 1e-12): (5, 8), (1e2, 1e-15): (6, 8),
    (1e3, 1e-3): (2, 11), (1e3, 1e-6): (3, 11), (1e3, 1e-9): (4, 11),
    (1e3, 1e-12): (5, 11), (1e3, 1e-15): (6, 11),
}


class TestTaylor:
    def test_zero_matrix(self):
        for k in (0, 1, 7):
            assert np.allclose(taylor_expm(np.zeros((3, 3)), k), np.eye(3))

    def test_diagonal_oracle(self):
        out = taylor_expm(np.diag([1.0, -1.0]).astype(complex), 30)
        assert np.allclose(out, np.diag([math.e, 1.0 / math.e]), atol=1e-14)

    def test_involutory_euler_formula(self):
        # exp(i theta sx) = cos(theta) I + i sin(theta) sx
        theta = 0.7321
        out = taylor_expm(1j * theta * SX, 60)
        expected = math.cos(theta) * np.eye(2) + 1j * math.sin(theta) * SX
        assert np.allclose(out, expected, atol=1e-14)

    def test_remainder_bound_zero_norm(self):
        assert taylor_remainder_bound(0.0, 5) == 0.0

    def test_remainder_bound_reference_value(self):
        # direct formula: (1/10!) * (1/11) * 1/(1 - 1/12)
        expected = (1.0 / math.factorial(10)) * (1.0 / 11.0) / (1.0 - 1.0 / 12.0)
        got = taylor_remainder_bound(1.0, 10)
        assert got == pytest.approx(expected, rel=1e-15)
        assert got == pytest.approx(2.73e-8, rel=0.01)
        # bound dominates the true scalar tail sum_{j>10} 1/j!
        tail = sum(1.0 / math.factorial(j) for j in range(11, 40))
        assert got >= tail
        assert got == pytest.approx(tail, rel=0.2)

    def test_remainder_bound_invalid_k(self):
        with pytest.raises(ValueError):
            taylor_remainder_bound(12.0, 5)   # eps = 12/7 >= 1

    def test_remainder_bound_monotone(self):
        vals = [taylor_remainder_bound(3.0, k) for k in range(4, 30)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_terms_for_digits_rule(self):
        # achieving d significant digits needs bound <= 10^-d
        k = taylor_terms_for(1.0, 1e-10)
        assert taylor_remainder_bound(1.0, k) <= 1e-10
        assert taylor_remainder_bound(1.0, k - 1) > 1e-10


class TestPadeSelect:
    def test_published_table_reproduced(self):
        for (norm, eps), expected in PADE_TABLE.items():
            got = pade_select_params(norm, eps)
            assert (got.q, got.j) == expected, f"norm={norm} eps={eps}"

    def test_scaling_condition(self):
        for norm in (0.4, 1.0, 7.0, 300.0):
            p = pade_select_params(norm, 1e-12)
            assert norm <= 2.0 ** (p.j - 1) + 1e-12
            assert pade_backward_bound(norm, p.q, p.j) <= 1e-12

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            pade_select_params(0.0, 1e-6)
        with pytest.raises(ValueError):
            pade_select_params(1.0, 0.0)
        with pytest.raises(ValueError):
            PadeParams(q=0, j=0)


class TestPadeExpm:
    def test_zero_matrix(self):
        assert np.allclose(pade_expm(np.zeros((4, 4)), PadeParams(3, 1)), np.eye(4))

    def test_skew_hermitian_matches_eigendecomposition(self, rng):
        for _ in range(20):
            a = random_skew_hermitian(rng, 4)
            a *= min(1.0, 1.0 / op_norm_inf(a))
            got = pade_expm_auto(a)
            want = expm_eig_oracle(a)
            assert np.linalg.norm(got - want) < 1e-12

    def test_unitarity_for_skew_hermitian(self, rng):
        for _ in range(50):
            a = random_skew_hermitian(rng, 5)
            u = pade_expm_auto(a)
            drift = spinalg.max_abs(u.conj().T @ u - np.eye(5))
            assert drift < 1e-12

    def test_singular_denominator_signals(self):
        # q=1, j=0 denominator I - A/2 is singular for A = 2
        with pytest.raises(ExpmError):
            pade_expm(np.array([[2.0 + 0j]]), PadeParams(1, 0))

    def test_taylor_pade_agreement(self, rng):
        for _ in range(10):
            a = random_hermitian(rng, 4)
            a *= min(1.0, 1.0 / op_norm_inf(a))
            norm = op_norm_inf(a)
            terms = taylor_terms_for(norm, 1e-12 * norm)
            diff = np.linalg.norm(taylor_expm(a, terms) - pade_expm_auto(a))
            assert diff < 1e-10


def fig7_matrix(dim=1001):
    lam = np.linspace(-40.0, 0.0, dim)
    return np.diag(lam).astype(np.complex128), lam


class TestLanczos:
    def test_eigenvector_start(self):
        a = np.diag([-1.0, -2.0]).astype(complex)
        b = np.array([1.0, 0.0], dtype=complex)
        fact = lanczos(a, b, 1)
        assert fact.m == 1
        assert np.allclose(fact.t, [[-1.0]])
        assert np.allclose(fact.v[:, 0], b)

    def test_full_dimension_eigenvalues(self, rng):
        a = random_hermitian(rng, 8)
        b = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        fact = lanczos(a, b, 8)
        got = np.sort(np.linalg.eigvalsh(fact.t))
        want = np.sort(np.linalg.eigvalsh(a))
        assert np.allclose(got, want, atol=1e-8)

    def test_recurrence_coefficients_real(self, rng):
        a = random_hermitian(rng, 10)
        b = rng.standard_normal(10) + 1j * rng.standard_normal(10)
        fact = lanczos(a, b, 6)
        assert fact.t.dtype.kind == "f"
        off = np.diag(fact.t, 1)
        assert np.all(off > 0)
        assert np.allclose(fact.t, fact.t.T)

    def test_t_equals_projected_a(self, rng):
        a = random_hermitian(rng, 12)
        b = rng.standard_normal(12) + 0j
        fact = lanczos(a, b, 7)
        proj = fact.v.conj().T @ a @ fact.v
        assert spinalg.max_abs(proj - fact.t) < 1e-8

    def test_breakdown_returns_early(self):
        a = np.diag([-1.0, -2.0, -3.0]).astype(complex)
        b = np.array([0.0, 1.0, 0.0], dtype=complex)  # eigenvector: invariant subspace
        fact = lanczos(a, b, 3)
        assert fact.m == 1

    def test_orthonormality_drift_on_wide_spectrum(self):
        a, _ = fig7_matrix()
        b = np.ones(1001, dtype=complex) / math.sqrt(1001)
        fact = lanczos(a, b, 50)
        gram = fact.v.conj().T @ fact.v
        assert spinalg.max_abs(gram - np.eye(fact.m)) < 1e-10

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            lanczos(np.eye(2, dtype=complex), np.zeros(2, dtype=complex), 1)


class TestKrylovAction:
    def test_eigenvector_input(self):
        a = np.diag([-1.0, -2.0]).astype(complex)
        b = np.array([0.0, 3.0], dtype=complex)
        out = krylov_expm_action(a, b, 1, t=0.5)
        assert np.allclose(out, np.exp(0.5 * -2.0) * b, atol=1e-14)

    def test_full_dimension_matches_oracle(self, rng):
        a = random_hermitian(rng, 8)
        b = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        want = expm_eig_oracle(a) @ b
        got = krylov_expm_action(a, b, 8)
        assert np.linalg.norm(got - want) < 1e-10

    def test_imaginary_time_gives_unitary_action(self, rng):
        a = random_hermitian(rng, 6)
        b = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        got = krylov_expm_action(a, b, 6, t=-1j)
        want = expm_eig_oracle(-1j * a) @ b
        assert np.linalg.norm(got - want) < 1e-10
        assert np.linalg.norm(got) == pytest.approx(np.linalg.norm(b), rel=1e-12)


class TestKrylovBound:
    def test_branch_continuity_at_2rt(self):
        rho, t = 10.0, 1.0
        m = int(2 * rho * t)   # boundary m = 20
        upper = 10.0 * math.exp(-m * m / (5 * rho * t))
        lower = 10.0 / (rho * t) * math.exp(-rho * t) * (math.e * rho * t / m) ** m
        assert krylov_error_bound(rho, t, m) == pytest.approx(lower)
        # the two branch formulas agree to within a modest factor at the seam
        assert 0.1 < upper / lower < 10.0

    def test_monotone_beyond_2rt(self):
        vals = [krylov_error_bound(10.0, 1.0, m) for m in range(20, 61)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_out_of_regime(self):
        with pytest.raises(ValueError):
            krylov_error_bound(10.0, 1.0, 3)   # below sqrt(40)

    def test_error_below_bound_midrange(self):
        a, lam = fig7_matrix()
        b = np.ones(1001, dtype=complex) / math.sqrt(1001)
        exact = np.exp(lam) * b
        for m in (7, 12, 20, 30, 40):
            got = krylov_expm_action(a, b, m)
            err = np.linalg.norm(got - exact)
            assert err <= krylov_error_bound(10.0, 1.0, m)
