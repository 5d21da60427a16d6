import numpy as np
import pytest

from rrextrap import linalg
from rrextrap.errors import NumericalFailure, ZeroRankError


def gram_singular_values_oracle(A):
    """Singular values of a tall n=3 matrix from the characteristic polynomial of A^T A."""
    G = A.T @ A
    tr = np.trace(G)
    minors = (G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
              + G[0, 0] * G[2, 2] - G[0, 2] * G[2, 0]
              + G[1, 1] * G[2, 2] - G[1, 2] * G[2, 1])
    det = (G[0, 0] * (G[1, 1] * G[2, 2] - G[1, 2] * G[2, 1])
           - G[0, 1] * (G[1, 0] * G[2, 2] - G[1, 2] * G[2, 0])
           + G[0, 2] * (G[1, 0] * G[2, 1] - G[1, 1] * G[2, 0]))
    p = lambda t: t**3 - tr * t**2 + minors * t - det
    dp = lambda t: 3 * t**2 - 2 * tr * t + minors
    roots = np.sort(np.real(np.roots([1.0, -tr, minors, -det])))[::-1]
    for i, t in enumerate(roots):
        for _ in range(5):
            t = t - p(t) / dp(t)
        roots[i] = t
    return np.sqrt(np.clip(roots, 0, None))


def solve_by_elimination(M, b):
    """Gaussian elimination with partial pivoting; tiny and independent of LAPACK."""
    M = np.array(M, dtype=float)
    b = np.array(b, dtype=float)
    n = len(b)
    for i in range(n):
        piv = i + int(np.argmax(np.abs(M[i:, i])))
        M[[i, piv]], b[[i, piv]] = M[[piv, i]], b[[piv, i]]
        for j in range(i + 1, n):
            f = M[j, i] / M[i, i]
            M[j, i:] -= f * M[i, i:]
            b[j] -= f * b[i]
    x = np.zeros(n)
    for i in reversed(range(n)):
        x[i] = (b[i] - M[i, i + 1:] @ x[i + 1:]) / M[i, i]
    return x


class TestSvd:
    def test_identity(self):
        np.testing.assert_array_equal(linalg.svd(np.eye(3)).s, [1.0, 1.0, 1.0])

    def test_diagonal(self):
        np.testing.assert_allclose(linalg.svd(np.diag([3.0, 2.0, 1.0])).s, [3.0, 2.0, 1.0])
        np.testing.assert_allclose(linalg.svd(np.diag([1.0, 3.0, 2.0])).s, [3.0, 2.0, 1.0])

    def test_against_characteristic_polynomial(self, rng):
        A = rng.standard_normal((5, 3))
        assert np.max(np.abs(linalg.svd(A).s - gram_singular_values_oracle(A))) <= 1e-10

    @pytest.mark.parametrize("shape", [(1, 1), (4, 2), (2, 4), (7, 7), (10, 3)])
    def test_reconstruction_and_ordering(self, rng, shape):
        A = rng.standard_normal(shape)
        f = linalg.svd(A)
        assert np.all(np.diff(f.s) <= 0) and np.all(f.s >= 0)
        err = np.linalg.norm(f.reconstruct() - A, 2)
        assert err <= 10 * linalg.EPS * np.linalg.norm(A, 2) * max(shape)

    def test_rank(self):
        assert linalg.svd(np.diag([1.0, 1e-20])).rank == 1
        assert linalg.svd(np.zeros((3, 2))).rank == 0

    def test_kernel_failure_is_explicit(self, monkeypatch):
        def boom(*a, **k):
            raise np.linalg.LinAlgError("SVD did not converge")
        monkeypatch.setattr(np.linalg, "svd", boom)
        with pytest.raises(NumericalFailure):
            linalg.svd(np.eye(2))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            linalg.svd([[1.0, np.nan]])

    def test_deterministic(self, rng):
        A = rng.standard_normal((6, 4))
        a, b = linalg.svd(A), linalg.svd(A.copy())
        assert a.s.tobytes() == b.s.tobytes() and a.U.tobytes() == b.U.tobytes()


class TestPseudoinverse:
    def test_identity(self):
        np.testing.assert_array_equal(linalg.pseudoinverse(np.eye(4)), np.eye(4))

    def test_rank_deficient_diagonal(self):
        np.testing.assert_allclose(linalg.pseudoinverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))

    def test_zero_matrix(self):
        P = linalg.pseudoinverse(np.zeros((3, 2)))
        assert P.shape == (2, 3) and not np.any(P)

    def test_full_column_rank_formula(self, rng):
        A = rng.standard_normal((4, 2))
        G = A.T @ A
        Ginv = np.array([[G[1, 1], -G[0, 1]], [-G[1, 0], G[0, 0]]]) / (G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0])
        assert np.max(np.abs(linalg.pseudoinverse(A) - Ginv @ A.T)) <= 1e-12

    def test_penrose_conditions(self, rng):
        for trial in range(200):
            m, n = rng.integers(1, 9, size=2)
            r = int(rng.integers(0, min(m, n) + 1))
            A = rng.standard_normal((m, r)) @ rng.standard_normal((r, n)) if r else np.zeros((m, n))
            P = linalg.pseudoinverse(A)
            nA, nP = np.linalg.norm(A, 2), np.linalg.norm(P, 2)
            assert np.linalg.norm(A @ P @ A - A, 2) <= 1e-10 * max(nA, 1e-300)
            assert np.linalg.norm(P @ A @ P - P, 2) <= 1e-10 * max(nP, 1e-300)
            assert np.linalg.norm((A @ P).T - A @ P, 2) <= 1e-10
            assert np.linalg.norm((P @ A).T - P @ A, 2) <= 1e-10

    def test_product_rule_full_rank_pairs(self, rng):
        for _ in range(50):
            m, n, p = 6, 3, 5
            A = rng.standard_normal((m, n))  # rank n
            B = rng.standard_normal((n, p))  # rank n
            lhs = linalg.pseudoinverse(A @ B)
            rhs = linalg.pseudoinverse(B) @ linalg.pseudoinverse(A)
            assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(lhs)))


class TestMinNormLsq:
    def test_identity(self):
        b = np.array([1.0, -2.0, 3.5])
        np.testing.assert_allclose(linalg.min_norm_lsq(np.eye(3), b), b)

    def test_two_equations_one_unknown(self):
        np.testing.assert_allclose(linalg.min_norm_lsq([[1.0], [1.0]], [0.0, 2.0]), [1.0])

    def test_matches_normal_equations(self, rng):
        A = rng.standard_normal((6, 3))
        b = rng.standard_normal(6)
        x_oracle = solve_by_elimination(A.T @ A, A.T @ b)
        assert np.max(np.abs(linalg.min_norm_lsq(A, b) - x_oracle)) <= 1e-10

    def test_minimum_norm_for_underdetermined(self):
        x = linalg.min_norm_lsq([[1.0, 1.0]], [2.0])
        np.testing.assert_allclose(x, [1.0, 1.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            linalg.min_norm_lsq(np.eye(3), np.ones(2))


class TestSmallestNonzeroSingular:
    def test_diagonal(self):
        assert linalg.smallest_nonzero_singular(np.diag([5.0, 3.0])) == pytest.approx(3.0)

    def test_cutoff_skips_zero(self):
        assert linalg.smallest_nonzero_singular(np.diag([5.0, 0.0]), rank_tol=1e-8) == pytest.approx(5.0)

    def test_reciprocal_of_pinv_norm(self, rng):
        A = rng.standard_normal((5, 2))
        expected = 1.0 / np.linalg.norm(linalg.pseudoinverse(A), 2)
        assert abs(linalg.smallest_nonzero_singular(A) - expected) <= 1e-10

    def test_zero_matrix(self):
        with pytest.raises(ZeroRankError):
            linalg.smallest_nonzero_singular(np.zeros((2, 2)))
