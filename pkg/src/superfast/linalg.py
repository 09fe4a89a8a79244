"""Dense matrix helpers and the deterministic factorizations used everywhere else.

Heavy lifting is done by LAPACK through numpy/scipy; this module fixes
conventions (signs, tolerances, typed errors) on top of it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError

RANK_TOL = 1e-10


def as_matrix(A, dtype=None) -> np.ndarray:
    """Return A as a 2-D finite array, raising on NaN/Inf or wrong shape."""
    A = np.asarray(A, dtype=dtype)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2:
        raise DimensionError(f"expected a matrix, got ndim={A.ndim}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def make_rng(seed=None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def index_set(indices, bound: int) -> np.ndarray:
    """Validate an ordered set of distinct indices below `bound`."""
    idx = np.asarray(indices, dtype=np.intp).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= bound):
        raise DimensionError(f"index out of range [0, {bound})")
    if np.unique(idx).size != idx.size:
        raise DimensionError("index set has duplicates")
    return idx


@dataclass
class Svd:
    S: np.ndarray
    Sigma: np.ndarray
    T: np.ndarray

    @property
    def rank(self) -> int:
        return self.Sigma.size

    def reconstruct(self) -> np.ndarray:
        return (self.S * self.Sigma) @ self.T.conj().T

    def truncate(self, r: int) -> "Svd":
        return Svd(self.S[:, :r], self.Sigma[:r], self.T[:, :r])


@dataclass
class LowRankFactors:
    """Pair U (m x l), V (l x n) approximating M ~ UV at target rank r."""

    U: np.ndarray
    V: np.ndarray
    r: int

    def __post_init__(self):
        if self.U.shape[1] != self.V.shape[0]:
            raise DimensionError("inner dimensions of U and V differ")
        if self.r > self.U.shape[1]:
            raise DimensionError("target rank exceeds inner dimension")

    @property
    def l(self) -> int:
        return self.U.shape[1]

    @property
    def shape(self):
        return (self.U.shape[0], self.V.shape[1])

    def product(self) -> np.ndarray:
        return self.U @ self.V


def matmul(A, B) -> np.ndarray:
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape[-1] != B.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    return A @ B


def thin_qr(A):
    """Thin QR with nonnegative diagonal in R."""
    A = as_matrix(A)
    m, n = A.shape
    if m < n:
        raise DimensionError("thin_qr needs rows >= cols")
    Q, R = np.linalg.qr(A, mode="reduced")
    s = np.sign(np.diag(R).real)
    s[s == 0] = 1
    return Q * s, R * s[:, None]


def svd(A, full: bool = False) -> Svd:
    """Compact SVD; the largest-magnitude entry of each left vector is made nonnegative."""
    A = as_matrix(A)
    try:
        S, sig, Th = np.linalg.svd(A, full_matrices=full)
    except np.linalg.LinAlgError:
        S, sig, Th = sla.svd(A, full_matrices=full, lapack_driver="gesvd")
    T = Th.conj().T
    if S.shape[0]:
        k = min(S.shape[1], T.shape[1])
        pick = np.abs(S[:, :k]).argmax(axis=0)
        sg = np.sign(S[pick, np.arange(k)].real)
        sg[sg == 0] = 1
        S = S.copy()
        T = T.copy()
        S[:, :k] *= sg
        T[:, :k] *= sg
    return Svd(S, sig, T)


def singular_values(A) -> np.ndarray:
    A = np.asarray(A)
    if A.size == 0:
        return np.zeros(0)
    return np.linalg.svd(A, compute_uv=False)


def truncate_rank(A, rho: int) -> LowRankFactors:
    """Best rank-rho approximation (S_rho diag(sigma), T_rho^*)."""
    A = as_matrix(A)
    if not 1 <= rho <= min(A.shape):
        raise DimensionError(f"rho={rho} outside [1, {min(A.shape)}]")
    s = svd(A)
    return LowRankFactors(s.S[:, :rho] * s.Sigma[:rho], s.T[:, :rho].conj().T, rho)


def pseudo_inverse(A, rank_tol: float = RANK_TOL, rank: int | None = None) -> np.ndarray:
    """Moore-Penrose inverse keeping sigma_j > rank_tol * sigma_1.

    With `rank` given, at most that many singular values are retained, which
    gives the pseudo-inverse of the rank-`rank` truncation.
    """
    A = as_matrix(A)
    if A.size == 0:
        return np.zeros(A.shape[::-1], dtype=A.dtype)
    s = svd(A)
    if s.Sigma.size == 0 or s.Sigma[0] == 0:
        return np.zeros(A.shape[::-1], dtype=A.dtype)
    keep = s.Sigma > rank_tol * s.Sigma[0]
    if rank is not None:
        keep[rank:] = False
    return (s.T[:, keep] / s.Sigma[keep]) @ s.S[:, keep].conj().T


def numerical_rank(A, tol: float, relative: bool = False) -> int:
    """Count singular values above tol (or tol * sigma_1 when relative)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    sig = singular_values(A)
    if sig.size == 0 or sig[0] == 0:
        return 0
    thr = tol * sig[0] if relative else tol
    return int(np.count_nonzero(sig > thr))


def spectral_norm(A) -> float:
    sig = singular_values(A)
    return float(sig[0]) if sig.size else 0.0


def frobenius_norm(A) -> float:
    return float(np.linalg.norm(np.asarray(A)))


def chebyshev_norm(A) -> float:
    A = np.asarray(A)
    return float(np.abs(A).max()) if A.size else 0.0


def matrix_norm(A, norm: str = "spectral") -> float:
    if norm == "spectral":
        return spectral_norm(A)
    if norm == "frobenius":
        return frobenius_norm(A)
    if norm == "chebyshev":
        return chebyshev_norm(A)
    raise ValueError(f"unknown norm {norm!r}")


def condition_number(A, rank_tol: float = RANK_TOL) -> float:
    """sigma_1 / sigma_rho for the numerical rank rho."""
    sig = singular_values(A)
    if sig.size == 0 or sig[0] == 0:
        raise ValueError("condition number of a zero matrix is undefined")
    rho = int(np.count_nonzero(sig > rank_tol * sig[0]))
    return float(sig[0] / sig[rho - 1])


def orthonormal_basis(n: int, k: int, rng) -> np.ndarray:
    """Q factor of an n x k Gaussian matrix."""
    return thin_qr(make_rng(rng).standard_normal((n, k)))[0]
