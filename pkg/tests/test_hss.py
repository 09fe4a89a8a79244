"""HSS build with both block strategies, matvec, serialization and read counts."""
import numpy as np
import pytest

from superfast import hss
from superfast.access import EntryOracle, OpCounter
from superfast.errors import DimensionError
from superfast.linalg import chebyshev_norm, spectral_norm
from superfast.testgen import cauchy_entries, gen_cauchy_like, gen_gravity_like, gen_hilbert_like


def block_diagonal(n, b, rng):
    M = np.zeros((n, n))
    for i in range(0, n, b):
        M[i:i + b, i:i + b] = rng.standard_normal((b, b))
    return M


class TestBuild:
    @pytest.mark.parametrize("strategy", ["svd", "cur_ca"])
    def test_block_diagonal(self, strategy, rng):
        M = block_diagonal(64, 8, rng)
        H = hss.build_hss(M, 3, 4, strategy=strategy, rng=rng)
        assert all(g.rank == 0 for g in H.generators)
        assert hss.hss_error(H, M) <= 1e-12 * spectral_norm(M)

    def test_tridiagonal(self, rng):
        n = 64
        M = np.diag(rng.standard_normal(n)) + np.diag(rng.standard_normal(n - 1), 1) \
            + np.diag(rng.standard_normal(n - 1), -1)
        H = hss.build_hss(M, 3, 2, strategy="svd", rng=rng)
        assert all(g.rank <= 1 for g in H.generators)
        assert hss.hss_error(H, M) <= 1e-10 * spectral_norm(M)

    def test_tridiagonal_sampling_can_miss(self):
        # off-diagonal blocks hold a single corner entry; sampled strips can miss it
        n = 64
        M = np.eye(n) + np.eye(n, k=1) + np.eye(n, k=-1)
        errs = [hss.hss_error(hss.build_hss(M, 3, 2, strategy="cur_ca", rng=s), M) for s in range(10)]
        assert max(errs) >= 0.5

    def test_cauchy(self):
        M = gen_cauchy_like(512)
        H = hss.build_hss(M, 4, 16, strategy="cur_ca", rng=0)
        assert hss.hss_error(H, M) / spectral_norm(M) <= 1e-5
        assert all(g.rank <= 16 for g in H.generators)

    def test_diagonal_budget(self, rng):
        H = hss.build_hss(gen_cauchy_like(128), 3, 8, rng=rng)
        assert hss.total_diagonal_entries(H) <= 2 * (128 + 128) * H.b

    def test_overflow_flagged(self, rng):
        M = rng.standard_normal((64, 64))
        H = hss.build_hss(M, 2, 4, tol=1e-8, rng=rng)
        assert H.overflow_blocks and all(g.rank == 4 for g in H.overflow_blocks)

    def test_preconditions(self, rng):
        with pytest.raises(DimensionError):
            hss.build_hss(np.eye(60), 3, 2)
        with pytest.raises(DimensionError):
            hss.build_hss(np.eye(64), 4, 8)
        with pytest.raises(ValueError):
            hss.build_hss(np.eye(64), 2, 2, strategy="nope")

    def test_strategies_agree(self):
        kernels = [gen_gravity_like(128), gen_hilbert_like(128), gen_cauchy_like(128)]
        ref = [hss.hss_error(hss.build_hss(M, 3, 8, 1e-8, "svd"), M) for M in kernels]
        ok = 0
        for s in range(100):
            M = kernels[s % 3]
            ok += hss.hss_error(hss.build_hss(M, 3, 8, 1e-8, "cur_ca", rng=s), M) <= 10 * ref[s % 3]
        assert ok >= 90

    def test_norm_sanity(self, rng):
        M = gen_cauchy_like(64)
        H = hss.build_hss(M, 2, 4, rng=rng)
        assert hss.hss_error(H, M, "chebyshev") <= hss.hss_error(H, M) * 64


class TestMatvec:
    def test_zero(self, rng):
        H = hss.build_hss(gen_cauchy_like(64), 2, 8, rng=rng)
        assert np.array_equal(hss.hss_matvec(H, np.zeros(64)), np.zeros(64))

    def test_block_diagonal(self, rng):
        M = block_diagonal(32, 8, rng)
        H = hss.build_hss(M, 2, 4, rng=rng)
        x = rng.standard_normal(32)
        expect = np.concatenate([M[i:i + 8, i:i + 8] @ x[i:i + 8] for i in range(0, 32, 8)])
        assert np.allclose(hss.hss_matvec(H, x), expect)

    def test_against_reconstruction(self, rng):
        M = rng.standard_normal((128, 128))
        H = hss.build_hss(M, 3, 8, rng=rng)
        A = hss.hss_reconstruct(H)
        nrm = spectral_norm(A)
        for _ in range(100):
            x = rng.standard_normal(128)
            assert np.linalg.norm(hss.hss_matvec(H, x) - A @ x) <= 1e-10 * nrm * np.linalg.norm(x)

    def test_flops(self, rng):
        n, L, r = 256, 4, 8
        H = hss.build_hss(gen_cauchy_like(n), L, r, rng=rng)
        c = OpCounter()
        hss.hss_matvec(H, rng.standard_normal(n), counter=c)
        assert c.flops <= 8 * (n + n) * r * L

    def test_length(self, rng):
        H = hss.build_hss(gen_cauchy_like(32), 1, 4, rng=rng)
        with pytest.raises(DimensionError):
            hss.hss_matvec(H, np.ones(31))


class TestAccess:
    def test_sublinear(self):
        ratios = []
        for n in (128, 256, 512):
            orc = EntryOracle(cauchy_entries(n), shape=(n, n))
            hss.build_hss(orc, 3, 16, strategy="cur_ca", rng=0)
            ratios.append(orc.reads / n ** 2)
        assert ratios[0] > ratios[1] > ratios[2]


class TestSerialization:
    def test_round_trip(self, rng):
        M = gen_cauchy_like(64)
        H = hss.build_hss(M, 2, 6, strategy="cur_ca", rng=rng)
        back = hss.HssMatrix.from_json(H.to_json())
        assert np.array_equal(hss.hss_reconstruct(back), hss.hss_reconstruct(H))
        assert [g.overflow for g in back.generators] == [g.overflow for g in H.generators]
