"""Least squares by sketching, with residual ratios and the retry loop."""
import numpy as np
import pytest

from superfast import lsr
from superfast import multipliers as mu
from superfast.errors import DimensionError, SketchRankFailure
from superfast.testgen import gen_lsr_family


def normal_equations(A, b):
    return np.linalg.solve(A.T @ A, A.T @ b)


class TestExact:
    def test_padded_identity(self):
        p = lsr.LsrProblem(np.vstack((np.eye(2), np.zeros((1, 2)))), [1.0, 2.0, 0.0])
        assert np.allclose(lsr.solve_exact(p), [1, 2])

    def test_consistent(self, rng):
        A = rng.standard_normal((20, 4))
        b = A @ rng.standard_normal(4)
        p = lsr.LsrProblem(A, b)
        assert np.linalg.norm(A @ lsr.solve_exact(p) - b) <= 1e-12 * np.linalg.norm(b)

    def test_normal_equations(self, rng):
        A, b = rng.standard_normal((50, 5)), rng.standard_normal(50)
        assert np.abs(lsr.solve_exact(lsr.LsrProblem(A, b)) - normal_equations(A, b)).max() <= 1e-8

    def test_shape_checks(self):
        with pytest.raises(DimensionError):
            lsr.LsrProblem(np.ones((3, 3)), np.ones(3))
        with pytest.raises(DimensionError):
            lsr.LsrProblem(np.ones((4, 2)), np.ones(3))


class TestRatio:
    def test_exact_is_one(self, rng):
        p = lsr.LsrProblem(rng.standard_normal((30, 3)), rng.standard_normal(30))
        assert lsr.residual_ratio(p, lsr.solve_exact(p)) == pytest.approx(1.0)

    def test_zero_optimal(self):
        A = np.zeros((4, 1))
        A[0, 0] = 1
        p = lsr.LsrProblem(A, [0.0, 1.0, 1.0, 0.0])
        assert lsr.residual_ratio(p, [0.0]) == pytest.approx(1.0)

    def test_never_below_one(self, rng):
        p = lsr.LsrProblem(rng.standard_normal((30, 3)), rng.standard_normal(30))
        for _ in range(50):
            assert lsr.residual_ratio(p, rng.standard_normal(3)) >= 1 - 1e-10


class TestSketchSolve:
    def test_full_permutation(self, rng):
        p = gen_lsr_family("gaussian", 64, 5, rng)
        F = mu.take_rows(mu.gen_permutation(64, rng), 64)
        rep = lsr.sketch_solve(p, F)
        assert rep.ratio == pytest.approx(1.0, abs=1e-12)
        assert rep.sketched_residual == pytest.approx(rep.true_residual, rel=1e-10)

    def test_full_orthogonal(self, rng):
        p = gen_lsr_family("gaussian", 64, 5, rng)
        for F in (mu.gen_householder_chain(64, 3, rng), mu.gen_abridged_hadamard(64, 6)):
            rep = lsr.sketch_solve(p, F)
            scale = np.sqrt(F.scale)
            assert rep.sketched_residual / scale == pytest.approx(rep.true_residual, rel=1e-10)

    def test_row_selection_skips_arithmetic(self, rng):
        p = gen_lsr_family("gaussian", 64, 3, rng)
        rows = np.sort(rng.choice(64, 20, replace=False))
        rep = lsr.sketch_solve(p, mu.SubIdentity(rows, 64))
        ref = np.linalg.lstsq(p.A[rows], p.b[rows], rcond=None)[0]
        assert np.allclose(rep.x_hat, ref)

    def test_rank_one_orthogonal_rhs(self, rng):
        u = rng.standard_normal(40)
        b = rng.standard_normal(40)
        b -= u * (u @ b) / (u @ u)
        p = lsr.LsrProblem(u[:, None], b)
        assert abs(lsr.solve_exact(p)[0]) <= 1e-12
        F = mu.gen_gaussian(6, 40, rng)
        Fu, Fb = F.A @ u, F.A @ b
        rep = lsr.sketch_solve(p, F)
        # one-column problem: x = <Fu, Fb> / ||Fu||^2
        assert rep.x_hat[0] == pytest.approx(Fu @ Fb / (Fu @ Fu), rel=1e-8, abs=1e-12)

    def test_gaussian_band(self):
        ratios = []
        for s in range(10):
            g = np.random.default_rng(s)
            p = gen_lsr_family("gaussian", 4096, 100, g)
            ratios.append(lsr.sketch_solve(p, mu.gen_gaussian(600, 4096, g)).ratio)
        assert np.mean(ratios) <= 1.20

    def test_rank_failure(self):
        A = np.zeros((10, 2))
        A[0, 0] = A[1, 1] = 1
        p = lsr.LsrProblem(A, np.ones(10))
        with pytest.raises(SketchRankFailure):
            lsr.sketch_solve(p, mu.SubIdentity([2, 3, 4], 10))

    def test_k_checks(self, rng):
        p = gen_lsr_family("gaussian", 20, 5, rng)
        with pytest.raises(DimensionError):
            lsr.sketch_solve(p, mu.gen_gaussian(4, 20, rng))

    def test_more_rows_help(self):
        small, large = [], []
        for s in range(100):
            g = np.random.default_rng(s)
            p = gen_lsr_family("gaussian", 400, 10, g)
            small.append(lsr.sketch_solve(p, mu.gen_gaussian(20, 400, g)).ratio)
            large.append(lsr.sketch_solve(p, mu.gen_gaussian(60, 400, g)).ratio)
        assert np.mean(large) <= np.mean(small)

    def test_orthogonal_sketch_band(self, rng):
        # F with orthonormal rows: ||F M z|| / ||z|| lies between the extreme singular values
        m, n, k = 256, 8, 64
        Q = np.linalg.qr(rng.standard_normal((m, k)))[0].T
        M = rng.standard_normal((m, n))
        sig = np.linalg.svd(Q @ M, compute_uv=False)
        sig_m = np.linalg.svd(M, compute_uv=False)
        xi_k = max(abs(sig[0] / np.sqrt(k) - 1), abs(sig[-1] / np.sqrt(k) - 1))
        xi_m = max(abs(sig_m[0] / np.sqrt(m) - 1), abs(sig_m[-1] / np.sqrt(m) - 1))
        lo, hi = (1 - xi_k) / (1 + xi_m), (1 + xi_k) / (1 - xi_m)
        inside = 0
        for _ in range(100):
            z = rng.standard_normal(n)
            z /= np.linalg.norm(z)
            ratio = np.linalg.norm(Q @ M @ z) / np.sqrt(k) / (np.linalg.norm(M @ z) / np.sqrt(m))
            inside += lo <= ratio <= hi
        assert inside >= 90


class TestRetries:
    def test_first_attempt(self):
        ok = 0
        for s in range(100):
            g = np.random.default_rng(s)
            p = gen_lsr_family("gaussian", 256, 5, g)
            rep = lsr.solve_with_retries(p, mu.gen_gaussian(30, 256, g), [mu.gen_permutation(256, g)], rng=g)
            ok += rep.accepted and rep.attempts == 1
        assert ok >= 95

    def test_adversarial_needs_permutation(self, rng):
        m, k = 32, 7
        A = np.zeros((m, 1))
        A[k, 0] = 1.0
        b = rng.standard_normal(m)
        p = lsr.LsrProblem(A, b)
        rows = [i for i in range(8) if i != k]
        F = mu.SubIdentity(rows, m)
        swap = np.arange(m)
        swap[[0, k]] = swap[[k, 0]]
        rep = lsr.solve_with_retries(p, F, [mu.Permutation(swap)], max_retries=1, rng=rng)
        assert rep.accepted and rep.attempts == 2
        assert rep.x_hat[0] == pytest.approx(b[k])

    def test_no_retries_is_honest(self, rng):
        m = 32
        A = np.zeros((m, 1))
        A[7, 0] = 1.0
        p = lsr.LsrProblem(A, rng.standard_normal(m))
        rep = lsr.solve_with_retries(p, mu.SubIdentity([0, 1, 2], m), [mu.gen_permutation(m, rng)],
                                     max_retries=0, rng=rng)
        assert rep.attempts == 1 and not rep.accepted and rep.flags

    def test_best_of(self, rng):
        p = gen_lsr_family("gaussian", 256, 5, rng)
        one = lsr.sketch_solve_best(p, lambda g: mu.gen_gaussian(15, 256, g), 1, 3)
        three = lsr.sketch_solve_best(p, lambda g: mu.gen_gaussian(15, 256, g), 3, 3)
        assert three.true_residual <= one.true_residual
