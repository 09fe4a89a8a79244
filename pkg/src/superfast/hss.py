"""HSS-style approximation: dense diagonal leaves plus low-rank off-diagonal blocks
of a recursive 2 x 2 partition, with a block-wise matvec."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .access import EntryOracle, _count, as_oracle
from .cur import cross_approx, lra_to_top_svd
from .errors import DimensionError, GeneratorRankFailure
from .linalg import make_rng, matrix_norm, numerical_rank, svd

CA_RANK_TOL = 1e-10


@dataclass
class Generator:
    level: int
    row0: int
    col0: int
    size: int
    F: np.ndarray  # size x rho
    H: np.ndarray  # rho x size
    overflow: bool = False

    @property
    def rank(self):
        return self.F.shape[1]


@dataclass
class HssMatrix:
    n: int
    L: int
    r: int
    leaves: list  # dense b x b diagonal blocks
    generators: list = field(default_factory=list)

    @property
    def b(self):
        return self.n >> self.L

    @property
    def overflow_blocks(self):
        return [g for g in self.generators if g.overflow]

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n, "L": self.L, "r": self.r,
            "leaves": [d.tolist() for d in self.leaves],
            "generators": [{"level": g.level, "row0": g.row0, "col0": g.col0, "size": g.size,
                            "F": g.F.tolist(), "H": g.H.tolist(), "overflow": g.overflow}
                           for g in self.generators]})

    @classmethod
    def from_json(cls, text: str) -> "HssMatrix":
        d = json.loads(text)
        gens = [Generator(g["level"], g["row0"], g["col0"], g["size"],
                          np.array(g["F"], dtype=float).reshape(g["size"], -1),
                          np.array(g["H"], dtype=float).reshape(-1, g["size"]), g["overflow"])
                for g in d["generators"]]
        return cls(d["n"], d["L"], d["r"], [np.array(x, dtype=float) for x in d["leaves"]], gens)


def _sub_oracle(oracle: EntryOracle, row0, col0, size) -> EntryOracle:
    return EntryOracle(lambda I, J: oracle.entries(np.asarray(I) + row0, np.asarray(J) + col0),
                       shape=(size, size))


def _smallest_rank(errors_at, hi, target):
    """Smallest rho in [0, hi] with errors_at(rho) <= target (errors nonincreasing)."""
    lo = 0
    if errors_at(hi) > target:
        return hi
    while lo < hi:
        mid = (lo + hi) // 2
        if errors_at(mid) <= target:
            hi = mid
        else:
            lo = mid + 1
    return lo


def _block_svd(oracle, r, tol):
    B = oracle.dense()
    sv = svd(B)
    sig = np.append(sv.Sigma, 0.0)
    scale = sig[0]
    if scale == 0:
        return np.zeros((B.shape[0], 0)), np.zeros((0, B.shape[1])), False
    rho = _smallest_rank(lambda k: sig[min(k, sig.size - 1)], r, tol * scale)
    overflow = sig[min(r, sig.size - 1)] > tol * scale
    return sv.S[:, :rho] * sv.Sigma[:rho], sv.T[:, :rho].T, bool(overflow)


def _block_cur_ca(oracle, r, tol, rng, loops, probe=16):
    size = oracle.shape[0]
    try:
        cur, trace = cross_approx(oracle, r, r, r, loops=loops, rng=rng, rank_tol=CA_RANK_TOL,
                              adapt_rank=True)
    except GeneratorRankFailure:
        # every sampled strip vanished numerically
        return np.zeros((size, 0)), np.zeros((0, size)), False
    C = trace.last_cols
    R = oracle.rows(cur.row_set)
    rho = numerical_rank(cur.nucleus, CA_RANK_TOL, relative=True) if np.any(cur.nucleus) else 0
    if rho == 0:
        return np.zeros((size, 0)), np.zeros((0, size)), False
    sv = lra_to_top_svd(C, cur.nucleus, R, rho, rank_tol=1e-300)
    sig = np.append(sv.Sigma, 0.0)
    rho = _smallest_rank(lambda k: sig[min(k, sig.size - 1)], rho, tol * sig[0])
    F = sv.S[:, :rho] * sv.Sigma[:rho]
    H = sv.T[:, :rho].T
    q = min(probe, size)
    I = np.sort(rng.choice(size, q, replace=False))
    J = np.sort(rng.choice(size, q, replace=False))
    Bs = oracle.block(I, J)
    den = np.linalg.norm(Bs)
    est = np.linalg.norm(Bs - F[I] @ H[:, J]) / den if den else 0.0
    return F, H, bool(est > tol)


def build_hss(M, L: int, r: int, tol: float = 1e-8, strategy: str = "svd", rng=None,
              loops: int = 2) -> HssMatrix:
    """Approximate the off-diagonal blocks of every level at rank <= r.

    Ranks are the smallest (by binary search) whose spectral error is at most
    tol times the block norm; blocks needing more than r are kept at rank r
    and flagged.  strategy='svd' reads each block densely; 'cur_ca' uses
    cross-approximation and reads only sampled rows and columns.
    """
    oracle = as_oracle(M)
    n = oracle.shape[0]
    if oracle.shape[1] != n or n % (1 << L):
        raise DimensionError("need a square matrix with n divisible by 2^L")
    b = n >> L
    if b < r:
        raise DimensionError("leaf size must be at least r")
    if strategy not in ("svd", "cur_ca"):
        raise ValueError("strategy must be svd or cur_ca")
    rng = make_rng(rng)
    gens = []
    for level in range(L):
        half = n >> (level + 1)
        for node in range(1 << level):
            a = node * 2 * half
            for row0, col0 in ((a, a + half), (a + half, a)):
                sub = _sub_oracle(oracle, row0, col0, half)
                brng = np.random.default_rng(rng.integers(2 ** 63))
                if strategy == "svd":
                    F, H, ovf = _block_svd(sub, r, tol)
                else:
                    F, H, ovf = _block_cur_ca(sub, r, tol, brng, loops)
                gens.append(Generator(level, row0, col0, half, F, H, ovf))
    leaves = [oracle.block(np.arange(i * b, (i + 1) * b), np.arange(i * b, (i + 1) * b))
              for i in range(1 << L)]
    return HssMatrix(n, L, r, leaves, gens)


def hss_matvec(H: HssMatrix, x, counter=None) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[0] != H.n:
        raise DimensionError("vector length mismatch")
    y = np.zeros(x.shape, dtype=np.result_type(x, np.float64))
    b = H.b
    for i, D in enumerate(H.leaves):
        y[i * b:(i + 1) * b] += D @ x[i * b:(i + 1) * b]
        _count(counter, 2 * b * b)
    for g in H.generators:
        if g.rank:
            y[g.row0:g.row0 + g.size] += g.F @ (g.H @ x[g.col0:g.col0 + g.size])
            _count(counter, 4 * g.size * g.rank)
    return y


def hss_reconstruct(H: HssMatrix) -> np.ndarray:
    A = np.zeros((H.n, H.n))
    b = H.b
    for i, D in enumerate(H.leaves):
        A[i * b:(i + 1) * b, i * b:(i + 1) * b] = D
    for g in H.generators:
        A[g.row0:g.row0 + g.size, g.col0:g.col0 + g.size] = g.F @ g.H
    return A


def hss_error(H: HssMatrix, M, norm: str = "spectral") -> float:
    return matrix_norm(np.asarray(M) - hss_reconstruct(H), norm)


def total_diagonal_entries(H: HssMatrix) -> int:
    return sum(D.size for D in H.leaves)
