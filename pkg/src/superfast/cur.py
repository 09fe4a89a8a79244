"""CUR approximation: maxvol selection, Primitive / Cynical / Cross-Approximation,
and the conversions LRA -> top SVD -> CUR."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .access import as_oracle
from .errors import DimensionError, GeneratorRankFailure, SelectionFailure
from .linalg import RANK_TOL, Svd, make_rng, matrix_norm, numerical_rank, pseudo_inverse, svd, thin_qr


def t_qsh(q: int, s: int, h: float) -> float:
    """((q - s) s h^2 + 1)^{1/2}."""
    return float(np.sqrt((q - s) * s * h * h + 1.0))


def maxvol_rows(A, h: float = 1.1, max_swaps: int | None = None) -> np.ndarray:
    """Rows I of the m x r matrix A with max |A A[I]^{-1}| <= h.

    Starts from the pivots of a column-pivoted QR of A^T and swaps the row
    holding the largest coefficient in until the dominance bound holds.
    """
    A = np.asarray(A)
    m, r = A.shape
    if r > m:
        raise DimensionError("need r <= m")
    if h < 1:
        raise ValueError("h must be >= 1")
    max_swaps = 4 * r if max_swaps is None else max_swaps
    _, _, piv = sla.qr(A.T, mode="economic", pivoting=True)
    I = np.array(piv[:r], dtype=np.intp)
    for _ in range(max_swaps + 1):
        Ahat = A[I]
        try:
            B = np.linalg.solve(Ahat.T, A.T).T
        except np.linalg.LinAlgError:
            raise SelectionFailure("singular pivot block") from None
        if not np.all(np.isfinite(B)):
            raise SelectionFailure("singular pivot block")
        absB = np.abs(B)
        i, j = np.unravel_index(absB.argmax(), absB.shape)
        if absB[i, j] <= h:
            return I
        I = I.copy()
        I[j] = i
    raise SelectionFailure(f"dominance {absB.max():.3g} > h after {max_swaps} swaps")


def select_rows(A, count: int, h: float = 1.1, max_swaps: int | None = None) -> np.ndarray:
    """maxvol rows of A, then greedily add rows with the largest norm in A A[I]^+."""
    A = np.asarray(A)
    m, r = A.shape
    if not r <= count <= m:
        raise DimensionError(f"cannot select {count} rows from {m} with rank {r}")
    I = list(maxvol_rows(A, h, max_swaps))
    while len(I) < count:
        B = A @ np.linalg.pinv(A[I])
        score = (np.abs(B) ** 2).sum(axis=1)
        score[I] = -1.0
        I.append(int(score.argmax()))
    return np.array(I, dtype=np.intp)


@dataclass
class CurDecomposition:
    row_set: np.ndarray
    col_set: np.ndarray
    nucleus: np.ndarray
    r: int
    kind: str = "truncated-pinv"
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.row_set = np.asarray(self.row_set, dtype=np.intp)
        self.col_set = np.asarray(self.col_set, dtype=np.intp)
        if self.nucleus.shape != (self.col_set.size, self.row_set.size):
            raise DimensionError("nucleus must be l x k")

    @property
    def k(self):
        return self.row_set.size

    @property
    def l(self):
        return self.col_set.size

    def C(self, M):
        return as_oracle(M).cols(self.col_set)

    def R(self, M):
        return as_oracle(M).rows(self.row_set)

    def reconstruct(self, M) -> np.ndarray:
        return self.C(M) @ self.nucleus @ self.R(M)

    def to_json(self) -> str:
        return json.dumps({"rows": self.row_set.tolist(), "cols": self.col_set.tolist(),
                           "nucleus": self.nucleus.tolist(), "r": self.r, "kind": self.kind})

    @classmethod
    def from_json(cls, text: str) -> "CurDecomposition":
        d = json.loads(text)
        return cls(np.array(d["rows"]), np.array(d["cols"]), np.array(d["nucleus"], dtype=float),
                   d["r"], d["kind"])


@dataclass
class CaTrace:
    records: list = field(default_factory=list)
    # final column strip M[:, J], kept so callers need not read it again
    last_cols: np.ndarray | None = None


def truncated_nucleus(G, r: int, rank_tol: float = RANK_TOL) -> np.ndarray:
    """(G_r)^+ after checking that G has numerical rank >= r."""
    if not np.any(G) or numerical_rank(G, rank_tol, relative=True) < r:
        raise GeneratorRankFailure(f"generator has numerical rank below {r}")
    return pseudo_inverse(G, rank_tol=0.0, rank=r)


def collapse_duplicates(rows, cols, nucleus):
    """Merge repeated row/column picks; C U R is unchanged because the repeated
    columns of C (rows of R) are identical."""
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    ur, rinv = np.unique(rows, return_inverse=True)
    uc, cinv = np.unique(cols, return_inverse=True)
    N = np.zeros((uc.size, ur.size), dtype=nucleus.dtype)
    np.add.at(N, (cinv[:, None], rinv[None, :]), nucleus)
    return ur, uc, N


def primitive_cur(M, rows, cols, r: int, rank_tol: float = RANK_TOL) -> CurDecomposition:
    """CUR with nucleus from the rank-r truncation of the generator M[rows, cols]."""
    oracle = as_oracle(M)
    m, n = oracle.shape
    rows = np.sort(np.asarray(rows, dtype=np.intp))
    cols = np.sort(np.asarray(cols, dtype=np.intp))
    if rows.size < r or cols.size < r:
        raise DimensionError("need |I|, |J| >= r")
    if np.unique(rows).size != rows.size or np.unique(cols).size != cols.size:
        raise DimensionError("index sets must be distinct")
    G = oracle.block(rows, cols)
    return CurDecomposition(rows, cols, truncated_nucleus(G, r, rank_tol), r)


def cynical_cur(M, p: int, q: int, k: int, l: int, r: int, rng=None, h: float = 1.1,
                rank_tol: float = RANK_TOL) -> CurDecomposition:
    """Pick a random p x q block, then k rows and l columns inside it by maxvol
    on its top-r singular vectors."""
    oracle = as_oracle(M)
    m, n = oracle.shape
    if not (0 < r <= k <= p <= m and r <= l <= q <= n):
        raise DimensionError("need 0 < r <= k <= p <= m and r <= l <= q <= n")
    rng = make_rng(rng)
    P0 = np.sort(rng.choice(m, p, replace=False))
    Q0 = np.sort(rng.choice(n, q, replace=False))
    B = oracle.block(P0, Q0)
    if not np.any(B) or numerical_rank(B, rank_tol, relative=True) < r:
        raise GeneratorRankFailure("sub-block has numerical rank below r")
    sv = svd(B)
    il = np.sort(select_rows(sv.S[:, :r], k, h))
    jl = np.sort(select_rows(sv.T[:, :r], l, h))
    G = B[np.ix_(il, jl)]
    return CurDecomposition(P0[il], Q0[jl], truncated_nucleus(G, r, rank_tol), r)


def _strip_basis(X, r, rank_tol, axis, adapt=False):
    """Top-r left (axis=0) or right (axis=1) singular vectors of a strip.

    With adapt=True a strip of lower numerical rank yields fewer vectors
    instead of a failure.
    """
    rho = numerical_rank(X, rank_tol, relative=True) if np.any(X) else 0
    if rho < r:
        if not adapt or rho == 0:
            raise GeneratorRankFailure("strip has numerical rank below r")
        r = rho
    sv = svd(X)
    return sv.S[:, :r] if axis == 0 else sv.T[:, :r]


def cross_approx(M, r: int, k: int | None = None, l: int | None = None, init_rows=None,
                 loops: int = 5, h: float = 1.1, stop_tol: float | None = None, rng=None,
                 rank_tol: float = RANK_TOL, adapt_rank: bool = True):
    """Cross-Approximation: alternate column selection in the row strip M[I, :]
    and row selection in the column strip M[:, J].

    Returns (CurDecomposition, CaTrace).  With stop_tol set, iterations stop
    once the sampled error estimate relative to the sampled norm falls below it.
    By default (adapt_rank=True) strips of numerical rank below r are handled at
    their own rank and the nucleus keeps at most r singular values above
    rank_tol; adapt_rank=False raises GeneratorRankFailure instead.
    """
    oracle = as_oracle(M)
    m, n = oracle.shape
    k = r if k is None else k
    l = r if l is None else l
    if not (r <= k <= m and r <= l <= n) or loops < 1:
        raise DimensionError("need r <= k <= m, r <= l <= n and loops >= 1")
    rng = make_rng(rng)
    I = (np.sort(rng.choice(m, k, replace=False)) if init_rows is None
         else np.asarray(init_rows, dtype=np.intp))
    if I.size != k:
        raise DimensionError("init_rows must have k entries")
    trace = CaTrace()
    J = C = None
    for it in range(loops):
        R = oracle.rows(I)
        J = np.sort(select_rows(_strip_basis(R, r, rank_tol, 1, adapt_rank), l, h))
        trace.records.append({"direction": "vertical", "loop": it, "cols": J.tolist(),
                              "volume": _log_volume(R[:, J], r)})
        C = oracle.cols(J)
        I = np.sort(select_rows(_strip_basis(C, r, rank_tol, 0, adapt_rank), k, h))
        rec = {"direction": "horizontal", "loop": it, "rows": I.tolist(),
               "volume": _log_volume(C[I], r)}
        trace.records.append(rec)
        if stop_tol is not None:
            U = (pseudo_inverse(C[I], rank_tol=rank_tol, rank=r) if adapt_rank
                 else truncated_nucleus(C[I], r, rank_tol))
            cur = CurDecomposition(I, J, U, r)
            rel = _sampled_relative_error(oracle, cur, C, rng)
            rec["error_estimate"] = rel
            if rel <= stop_tol:
                break
    trace.last_cols = C
    if adapt_rank:
        U = pseudo_inverse(C[I], rank_tol=rank_tol, rank=r)
    else:
        U = truncated_nucleus(C[I], r, rank_tol)
    return CurDecomposition(I, J, U, r), trace


def _log_volume(G, r):
    sig = np.linalg.svd(G, compute_uv=False)[:r]
    return float(np.sum(np.log(np.maximum(sig, 1e-300))))


def _sampled_relative_error(oracle, cur, C, rng, q=10, s=10):
    m, n = oracle.shape
    q, s = min(q, m), min(s, n)
    I = rng.choice(m, q, replace=False)
    J = rng.choice(n, s, replace=False)
    Mb = oracle.block(I, J)
    R = oracle.block(cur.row_set, J)
    approx = C[I] @ cur.nucleus @ R
    den = np.linalg.norm(Mb)
    return float(np.linalg.norm(Mb - approx) / den) if den else float(np.linalg.norm(approx))


def cur_evaluate(M, c: CurDecomposition, norm: str = "spectral") -> float:
    """||M - C U R|| with M read densely."""
    M = np.asarray(M)
    return matrix_norm(M - c.reconstruct(M), norm)


def lra_to_top_svd(A, W=None, B=None, r: int | None = None, rank_tol: float = RANK_TOL) -> Svd:
    """Top-r SVD of A W B from QR factors of A and B^T and an SVD of the small core.

    Two-factor input: lra_to_top_svd(U, None, V, r).
    """
    A = np.asarray(A)
    B = np.asarray(B)
    W = np.eye(A.shape[1]) if W is None else np.asarray(W)
    if A.shape[1] != W.shape[0] or W.shape[1] != B.shape[0]:
        raise DimensionError("factors are not conformable")
    r = min(W.shape) if r is None else r
    if r > min(W.shape):
        raise DimensionError("need r <= min(k, l)")
    Q1, R1 = thin_qr(A) if A.shape[0] >= A.shape[1] else (np.eye(A.shape[0]), A)
    Q2, R2 = thin_qr(B.T) if B.shape[1] >= B.shape[0] else (np.eye(B.shape[1]), B.T)
    core = R1 @ W @ R2.T
    if not np.any(core) or numerical_rank(core, rank_tol, relative=True) < r:
        raise GeneratorRankFailure(f"LRA core has numerical rank below {r}")
    sv = svd(core)
    return Svd(Q1 @ sv.S[:, :r], sv.Sigma[:r].copy(), Q2 @ sv.T[:, :r])


def top_svd_to_cur(M, sv: Svd, k: int, l: int, h: float = 1.1, selector: str = "deterministic",
                   rng=None, delta: float = 0.1) -> CurDecomposition:
    """CUR whose generator is the (I, J) block of S Sigma T^*.

    Deterministic: I, J by maxvol on S and T.  Sampled: leverage sampling of
    rows of S and T with rescaling.  The generator is formed from the SVD
    factors, so no entry of M is read until C and R are requested.
    """
    S, sig, T = sv.S, sv.Sigma, sv.T
    r = sig.size
    m, n = S.shape[0], T.shape[0]
    if not (r <= k <= m and r <= l <= n):
        raise DimensionError("need r <= k <= m and r <= l <= n")
    diag = {"sigma_r": float(sig[-1])}
    if selector == "deterministic":
        I = np.sort(select_rows(S, k, h))
        J = np.sort(select_rows(T, l, h))
        G = (S[I] * sig) @ T[J].conj().T
        U = pseudo_inverse(G, rank_tol=0.0, rank=r)
        diag["nucleus_norm"] = float(np.linalg.norm(U, 2))
        diag["nucleus_bound"] = t_qsh(m, l, h) * t_qsh(n, k, h) / float(sig[-1])
        return CurDecomposition(I, J, U, r, "truncated-pinv", diag)
    if selector == "sampled":
        from .leverage import sample_exactly, svd_leverage_scores
        rng = make_rng(rng)
        rs = sample_exactly(svd_leverage_scores(S), k, rng)
        cs = sample_exactly(svd_leverage_scores(T), l, rng)
        G = (rs.D[:, None] * (S[rs.S] * sig)) @ (T[cs.S].conj().T * cs.D[None, :])
        Gp = pseudo_inverse(G, rank_tol=0.0, rank=r)
        U = cs.D[:, None] * Gp * rs.D[None, :]
        eps = lambda c: np.sqrt(4 * r * np.log(2 * r / delta) / c)
        diag["nucleus_norm"] = float(np.linalg.norm(Gp, 2))
        diag["nucleus_bound"] = float((1 + eps(l)) * (1 + eps(k)) / sig[-1])
        I, J, U = collapse_duplicates(rs.S, cs.S, U)
        return CurDecomposition(I, J, U, r, "sampled", diag)
    raise ValueError("selector must be deterministic or sampled")
