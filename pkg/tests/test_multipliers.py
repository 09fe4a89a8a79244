"""Structured sketch operators: small hand-checked matrices, materialization
equivalence, orthogonality, flop budgets and the bidiagonal-product generator."""
import json

import numpy as np
import pytest

from superfast import multipliers as mu
from superfast.access import OpCounter
from superfast.errors import CapExceeded, DimensionError

H4 = np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]], dtype=float)
F4 = np.array([[1, 1, 1, 1], [1, 1j, -1, -1j], [1, -1, 1, -1], [1, -1j, -1, 1j]])


def all_kinds(n, rng):
    d = min(3, int(np.log2(n)))
    ops = {
        "perm": mu.gen_permutation(n, rng),
        "sign": mu.gen_sign_diagonal(n, rng),
        "ah": mu.gen_abridged_hadamard(n, d),
        "af": mu.gen_abridged_fourier(n, d),
        "circ": mu.gen_sparse_circulant(n, min(3, n), rng),
        "circ_fft": mu.gen_sparse_circulant(n, n, rng, f=-1.0),
        "invbid": mu.gen_inverse_bidiagonal(n, rng),
        "invbid_up": mu.gen_inverse_bidiagonal(n, rng, "upper"),
        "house": mu.gen_householder_chain(n, 2, rng),
        "gauss": mu.gen_gaussian(n, n, rng),
        "asph": mu.gen_asph(n, d, rng),
        "aspf": mu.gen_aspf(n, d, rng),
        "bisum": mu.gen_bidiagonal_sum(n, rng),
        "subid": mu.SubIdentity(rng.choice(n, n // 2, replace=False), n),
    }
    ops["slice"] = mu.take_columns(ops["asph"], max(1, n // 2), "random", rng)
    ops["rows"] = mu.take_rows(ops["house"], max(1, n // 2), "random", rng)
    ops["transposed"] = ops["invbid"].T
    return ops


class TestSmallMatrices:
    def test_hadamard_depth_one(self):
        I2 = np.eye(2)
        expect = np.block([[I2, I2], [I2, -I2]])
        assert np.array_equal(mu.materialize(mu.AbridgedHadamard(4, 1)), expect)

    def test_hadamard_depth_two(self):
        assert np.array_equal(mu.materialize(mu.AbridgedHadamard(4, 2)), H4)

    def test_fourier_depth_two(self):
        assert np.abs(mu.materialize(mu.AbridgedFourier(4, 2)) - F4).max() <= 1e-15

    def test_bad_depth(self):
        with pytest.raises(DimensionError):
            mu.AbridgedHadamard(6, 2)

    def test_reversal(self):
        P = mu.Permutation(np.arange(5)[::-1])
        assert np.array_equal(mu.apply(P, np.eye(5)), np.eye(5)[::-1])

    def test_zero_bidiagonal_is_identity(self, rng):
        X = rng.standard_normal((6, 2))
        assert np.array_equal(mu.apply(mu.InverseBidiagonal(np.zeros(5)), X), X)

    def test_permutation_matrix(self, rng):
        P = mu.materialize(mu.gen_permutation(7, rng))
        assert np.all((P == 0) | (P == 1))
        assert np.all(P.sum(0) == 1) and np.all(P.sum(1) == 1)

    def test_sign_diagonal(self, rng):
        D = mu.materialize(mu.gen_sign_diagonal(6, rng))
        assert np.array_equal(D, np.diag(np.diag(D)))

    def test_singular_diagonal_rejected(self):
        with pytest.raises(DimensionError):
            mu.SignDiagonal([1.0, 0.0])

    def test_sum_of_permutations(self, rng):
        S = mu.Sum([mu.gen_permutation(8, rng), mu.gen_permutation(8, rng), mu.gen_permutation(8, rng)])
        assert np.array_equal(mu.apply(S, np.ones((8, 1))), 3 * np.ones((8, 1)))

    def test_asph_scales_nonzero(self, rng):
        D = mu.gen_asph(64, 3, rng).ops[1]
        assert np.all(D.d != 0) and set(np.abs(D.d)) <= {1, 2, 3, 4}


class TestApplyEquivalence:
    @pytest.mark.parametrize("n", [4, 8, 16, 64])
    def test_left_right(self, n, rng):
        for name, op in all_kinds(n, rng).items():
            A = mu.materialize(op)
            X = rng.standard_normal((op.cols, 3))
            Y = rng.standard_normal((3, op.rows))
            tol = 1e-12 * np.linalg.norm(A, 2) * max(np.linalg.norm(X), np.linalg.norm(Y))
            assert np.abs(mu.apply(op, X, "left") - A @ X).max() <= tol, name
            assert np.abs(mu.apply(op, Y, "right") - Y @ A).max() <= tol, name

    def test_hadamard_8(self, rng):
        op = mu.AbridgedHadamard(8, 3)
        M = rng.standard_normal((8, 3))
        assert np.abs(mu.apply(op, M) - mu.materialize(op) @ M).max() <= 1e-13

    def test_shape_mismatch(self, rng):
        with pytest.raises(DimensionError):
            mu.apply(mu.gen_permutation(4, rng), np.ones((5, 2)))

    def test_column_nonzeros(self):
        for op, nnz in ((mu.AbridgedHadamard(32, 3), 8), (mu.AbridgedFourier(32, 2), 4),
                        (mu.SparseCirculant(32, [1, 5, 9], [1, -1, 1]), 3)):
            A = mu.materialize(op)
            assert np.all(np.count_nonzero(np.abs(A) > 1e-14, axis=0) <= nnz)


class TestOrthogonality:
    @pytest.mark.parametrize("n", [8, 64])
    def test_scaled_identity(self, n, rng):
        ops = all_kinds(n, rng)
        for name in ("perm", "sign", "ah", "af", "house", "asph"):
            op = ops[name]
            A = mu.materialize(op)
            G = A.conj().T @ A
            c = op.scale if op.scale is not None else G[0, 0].real
            if name == "asph":
                continue
            assert np.linalg.norm(G - c * np.eye(n)) <= 1e-10 * n, name

    def test_asph_conditioning(self, rng):
        op = mu.gen_asph(32, 3, rng)
        A = mu.materialize(op)
        # orthogonal times a diagonal with |d| in [1, 4]
        assert np.linalg.cond(A) <= 4.0 * (1 + 1e-9)

    def test_slice_of_orthogonal(self, rng):
        op = mu.take_columns(mu.gen_abridged_hadamard(16, 4), 5, "random", rng)
        A = mu.materialize(op)
        assert np.allclose(A.T @ A, 16 * np.eye(5))

    def test_inverse_bidiagonal_conditioning(self, rng):
        # the sqrt(2n) bound does not hold for +-1 off-diagonals; kappa grows like n
        kappas = [np.linalg.cond(mu.materialize(mu.gen_inverse_bidiagonal(n, rng))) for n in (16, 64)]
        assert all(np.isfinite(kappas))
        assert kappas[1] > kappas[0]


class TestSlices:
    def test_identity_slice(self):
        s = mu.take_columns(mu.Permutation(np.arange(6)), 3)
        assert isinstance(s, mu.SubIdentity)
        assert np.array_equal(mu.materialize(s), np.eye(6)[:, :3])

    def test_hadamard_slice(self):
        s = mu.take_columns(mu.AbridgedHadamard(4, 2), 2)
        assert np.array_equal(mu.materialize(s), H4[:, :2])

    def test_slice_conditioning(self, rng):
        for _ in range(50):
            op = mu.Product([mu.gen_sign_diagonal(16, rng, mu.ASPH_SCALES), mu.gen_householder_chain(16, 2, rng)])
            full = np.linalg.cond(mu.materialize(op))
            part = np.linalg.cond(mu.materialize(mu.take_columns(op, 5, "random", rng)))
            assert part <= full * (1 + 1e-10)

    def test_too_many(self, rng):
        with pytest.raises(DimensionError):
            mu.take_columns(mu.gen_permutation(4, rng), 5)

    def test_cap(self):
        with pytest.raises(CapExceeded):
            mu.materialize(mu.AbridgedHadamard(8, 1), cap=4)


class TestFlopBudget:
    def test_hadamard(self, rng):
        n, d, cols = 64, 3, 5
        c = OpCounter()
        mu.apply(mu.AbridgedHadamard(n, d), rng.standard_normal((n, cols)), counter=c)
        assert 0 < c.flops <= d * n * cols

    def test_inverse_bidiagonal(self, rng):
        n, cols = 64, 4
        c = OpCounter()
        mu.apply(mu.gen_inverse_bidiagonal(n, rng), rng.standard_normal((n, cols)), counter=c)
        assert 0 < c.flops <= 2 * n * cols

    def test_circulant(self, rng):
        n, s, cols = 64, 4, 3
        c = OpCounter()
        mu.apply(mu.gen_sparse_circulant(n, s, rng), rng.standard_normal((n, cols)), counter=c)
        assert 0 < c.flops <= (2 * s - 1) * n * cols


class TestDeterminismAndSerialization:
    def test_same_seed_same_operator(self):
        X = np.random.default_rng(5).standard_normal((64, 3))
        a = mu.apply(mu.gen_asph(64, 3, 11), X)
        b = mu.apply(mu.gen_asph(64, 3, 11), X)
        assert a.tobytes() == b.tobytes()

    def test_round_trip(self, rng):
        for name, op in all_kinds(16, rng).items():
            desc = json.loads(json.dumps(op.to_dict()))
            back = mu.from_dict(desc)
            assert back.shape == op.shape
            assert np.allclose(mu.materialize(back), mu.materialize(op)), name


class TestBidiagonalProduct:
    def test_zero_factors(self, rng):
        assert np.array_equal(mu.gen_bidiagonal_product(5, 0, rng, standardize=False), np.eye(5))

    def test_single_factor(self):
        # brute-force seeds until the draw is all +1 signs and the identity permutation
        for seed in range(20000):
            g = np.random.default_rng(seed)
            s, p = g.choice([-1.0, 1.0], 3), g.permutation(3)
            if np.all(s == 1) and np.array_equal(p, np.arange(3)):
                break
        else:
            pytest.skip("no suitable seed found")
        X = mu.gen_bidiagonal_product(3, 1, seed, standardize=False)
        B = np.eye(3) + np.diag([1.0, 1.0], -1)
        B[0, 2] = 1.0
        assert np.array_equal(X, B)

    def test_column_shortcut(self):
        full = mu.gen_bidiagonal_product(32, 6, 3)
        col = mu.bidiagonal_product_column(32, 6, 7, 3)
        assert np.allclose(full[:, 7], col)

    def test_standardized(self, rng):
        X = mu.gen_bidiagonal_product(64, 10, rng)
        assert np.allclose(X.mean(0), 0, atol=1e-12) and np.allclose(X.std(0), 1)


class TestKs:
    def test_normal_draws_pass(self):
        passes = sum(mu.ks_normality(np.random.default_rng(s).standard_normal(10000))[1] for s in range(100))
        assert passes >= 94

    def test_constant_rejected(self):
        with pytest.raises(ValueError):
            mu.ks_normality(np.ones(100))

    def test_uniform_fails(self, rng):
        assert not mu.ks_normality(rng.uniform(size=10000))[1]
