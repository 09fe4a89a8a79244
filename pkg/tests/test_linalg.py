"""Dense kernels checked against hand values and independent oracles."""
import numpy as np
import pytest

from superfast import linalg as la
from superfast.errors import DimensionError


def triple_loop(A, B):
    m, k = A.shape
    n = B.shape[1]
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for t in range(k):
                acc += A[i, t] * B[t, j]
            out[i, j] = acc
    return out


class TestMatmul:
    def test_identity(self, rng):
        B = rng.standard_normal((3, 4))
        assert np.array_equal(la.matmul(np.eye(3), B), B)

    def test_hand_values(self):
        assert la.matmul([[1, 2], [3, 4]], [[1], [1]]).tolist() == [[3], [7]]

    def test_against_loops(self, rng):
        A, B = rng.standard_normal((5, 4)), rng.standard_normal((4, 3))
        assert np.abs(la.matmul(A, B) - triple_loop(A, B)).max() <= 1e-14

    def test_mismatch(self):
        with pytest.raises(DimensionError):
            la.matmul(np.ones((2, 3)), np.ones((2, 3)))


class TestThinQr:
    def test_hand_values(self):
        Q, R = la.thin_qr([[3.0], [4.0]])
        assert np.allclose(Q, [[0.6], [0.8]], atol=1e-15)
        assert np.allclose(R, [[5.0]], atol=1e-14)

    def test_orthonormal_input(self, rng):
        X = la.orthonormal_basis(8, 3, rng)
        Q, R = la.thin_qr(X)
        assert np.allclose(np.abs(np.diag(R)), 1, atol=1e-12)
        assert np.allclose(np.abs(R - np.diag(np.diag(R))), 0, atol=1e-12)
        assert np.allclose(np.abs(Q.T @ X), np.eye(3), atol=1e-12)

    def test_random(self, rng):
        A = rng.standard_normal((8, 3))
        Q, R = la.thin_qr(A)
        assert np.linalg.norm(Q.T @ Q - np.eye(3)) <= 1e-13
        assert np.linalg.norm(Q @ R - A) <= 1e-12 * np.linalg.norm(A)
        assert np.all(np.diag(R) >= 0)
        assert np.allclose(np.tril(R, -1), 0)

    def test_wide_rejected(self):
        with pytest.raises(DimensionError):
            la.thin_qr(np.ones((2, 3)))


class TestSvd:
    def test_diagonal(self):
        s = la.svd(np.diag([3.0, 1.0]))
        assert np.allclose(s.Sigma, [3, 1])
        assert np.allclose(np.abs(s.S), np.eye(2))
        assert np.allclose(np.abs(s.T), np.eye(2))

    def test_rank_one(self, rng):
        u, v = rng.standard_normal(6), rng.standard_normal(4)
        s = la.svd(np.outer(u, v))
        assert s.Sigma[0] == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v), rel=1e-13)
        assert np.all(s.Sigma[1:] <= 1e-13 * s.Sigma[0])

    def test_eigen_oracle(self, rng):
        A = rng.standard_normal((6, 4))
        ev = np.sqrt(np.clip(np.linalg.eigvalsh(A.T @ A)[::-1], 0, None))
        s = la.svd(A)
        assert np.abs(s.Sigma - ev).max() <= 1e-10 * s.Sigma[0]

    def test_invariants_and_sign(self, rng):
        A = rng.standard_normal((7, 5))
        s = la.svd(A)
        assert np.linalg.norm(s.S.T @ s.S - np.eye(5)) <= 1e-12 * 5
        assert np.linalg.norm(s.T.T @ s.T - np.eye(5)) <= 1e-12 * 5
        assert la.spectral_norm(s.reconstruct() - A) <= 1e-12 * la.spectral_norm(A)
        assert np.all(np.diff(s.Sigma) <= 0)
        big = s.S[np.abs(s.S).argmax(axis=0), np.arange(5)]
        assert np.all(big >= 0)

    def test_weyl(self, rng):
        A = rng.standard_normal((9, 6))
        E = 1e-3 * rng.standard_normal((9, 6))
        d = np.abs(la.svd(A).Sigma - la.svd(A + E).Sigma)
        assert np.all(d <= la.spectral_norm(E) * (1 + 1e-8))


class TestTruncation:
    def test_full_rank_exact(self, rng):
        A = rng.standard_normal((5, 3)) @ rng.standard_normal((3, 6))
        f = la.truncate_rank(A, 3)
        assert la.spectral_norm(A - f.product()) <= 1e-12 * la.spectral_norm(A)

    def test_diag_error(self):
        f = la.truncate_rank(np.diag([3.0, 2.0, 1.0]), 2)
        assert la.spectral_norm(np.diag([3.0, 2.0, 1.0]) - f.product()) == pytest.approx(1.0, abs=1e-12)

    def test_frobenius_tail(self, rng):
        A = rng.standard_normal((7, 5))
        sig = la.singular_values(A)
        f = la.truncate_rank(A, 2)
        assert la.frobenius_norm(A - f.product()) ** 2 == pytest.approx(np.sum(sig[2:] ** 2), rel=1e-10)

    def test_optimality_spot(self, rng):
        A = rng.standard_normal((8, 8))
        best = la.spectral_norm(A - la.truncate_rank(A, 3).product())
        for _ in range(100):
            B = rng.standard_normal((8, 3)) @ rng.standard_normal((3, 8))
            assert best <= la.spectral_norm(A - B) + 1e-9 * la.spectral_norm(A)

    def test_out_of_range(self):
        with pytest.raises(DimensionError):
            la.truncate_rank(np.eye(3), 4)
        with pytest.raises(DimensionError):
            la.truncate_rank(np.eye(3), 0)


class TestPseudoInverse:
    def test_orthogonal(self, rng):
        Q = la.orthonormal_basis(5, 5, rng)
        assert np.allclose(la.pseudo_inverse(Q), Q.T, atol=1e-13)

    def test_singular_diag(self):
        assert np.allclose(la.pseudo_inverse(np.diag([2.0, 0.0]), 1e-8), np.diag([0.5, 0.0]))

    def test_penrose(self, rng):
        A = rng.standard_normal((5, 3))
        P = la.pseudo_inverse(A)
        nrm = la.spectral_norm(A)
        assert la.spectral_norm(A @ P @ A - A) <= 1e-11 * nrm
        assert la.spectral_norm(P @ A @ P - P) <= 1e-10 * la.spectral_norm(P)
        assert la.spectral_norm((A @ P).T - A @ P) <= 1e-10
        assert la.spectral_norm((P @ A).T - P @ A) <= 1e-10

    def test_zero(self):
        assert np.array_equal(la.pseudo_inverse(np.zeros((2, 3))), np.zeros((3, 2)))

    def test_product_bound(self, rng):
        for _ in range(20):
            A, B, C = (rng.standard_normal((4, 4)) for _ in range(3))
            lhs = la.spectral_norm(la.pseudo_inverse(A @ B @ C))
            rhs = np.prod([la.spectral_norm(la.pseudo_inverse(X)) for X in (A, B, C)])
            assert lhs <= rhs * (1 + 1e-8)


class TestRankAndNorms:
    def test_absolute_rank(self):
        assert la.numerical_rank(np.diag([1.0, 1e-10]), 1e-6) == 1

    def test_zero_rank(self):
        assert la.numerical_rank(np.zeros((3, 3)), 1e-6) == 0

    def test_relative_rank(self):
        assert la.numerical_rank(np.diag([100.0, 1e-5]), 1e-6, relative=True) == 1
        assert la.numerical_rank(np.diag([100.0, 1e-5]), 1e-6) == 2

    def test_diag_norms(self):
        D = np.diag([4.0, 2.0])
        assert la.spectral_norm(D) == pytest.approx(4)
        assert la.frobenius_norm(D) == pytest.approx(np.sqrt(20))
        assert la.condition_number(D) == pytest.approx(2)
        assert la.matrix_norm(D, "chebyshev") == 4

    def test_orthogonal_kappa(self, rng):
        assert la.condition_number(la.orthonormal_basis(6, 6, rng)) == pytest.approx(1, abs=1e-12)

    def test_zero_kappa(self):
        with pytest.raises(ValueError):
            la.condition_number(np.zeros((2, 2)))

    def test_norm_chain(self, rng):
        for _ in range(20):
            A = rng.standard_normal((6, 4))
            rho = la.numerical_rank(A, 1e-12, relative=True)
            s, f = la.spectral_norm(A), la.frobenius_norm(A)
            assert s <= f * (1 + 1e-14) and f <= np.sqrt(rho) * s * (1 + 1e-14)

    def test_index_set(self):
        assert la.index_set([2, 0], 3).tolist() == [2, 0]
        with pytest.raises(DimensionError):
            la.index_set([0, 0], 3)
        with pytest.raises(DimensionError):
            la.index_set([3], 3)
