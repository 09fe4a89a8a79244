"""Range-finder low-rank approximation and its error diagnostics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .access import EntryOracle, _count, as_oracle
from .errors import CapExceeded, DimensionError, PremultRankFailure, RangeFailure
from .linalg import (LowRankFactors, RANK_TOL, make_rng, numerical_rank, pseudo_inverse,
                     spectral_norm, svd, thin_qr)
from .multipliers import SketchOperator, SubIdentity, apply

DIAGNOSTIC_CAP = 512


@dataclass
class LraErrorEstimate:
    estimate_frobenius: float
    q: int
    s: int
    confidence_interval: tuple | None


def _as_operator_apply(H, M, side, counter=None):
    if isinstance(H, SketchOperator):
        return apply(H, M, side, counter)
    H = np.asarray(H)
    return H @ M if side == "left" else M @ H


def _range_basis(MH, r, variant, rank_tol):
    if not np.any(MH) or numerical_rank(MH, rank_tol, relative=True) < r:
        raise RangeFailure(f"MH has numerical rank below {r}")
    if variant == "a":
        if MH.shape[0] < MH.shape[1]:
            raise DimensionError("l exceeds m")
        return thin_qr(MH)[0]
    if variant == "b":
        return svd(MH).S[:, :r]
    raise ValueError("variant must be 'a' or 'b'")


def range_finder(M, H, r: int, variant: str = "a", rank_tol: float = RANK_TOL,
                 counter=None) -> LowRankFactors:
    """U spans range(MH) (variant a) or its top-r part (variant b); V = U^+ M."""
    M = np.asarray(M)
    l = H.shape[1]
    if not r <= l <= M.shape[1]:
        raise DimensionError("need r <= l <= n")
    MH = _as_operator_apply(H, M, "right", counter)
    U = _range_basis(MH, r, variant, rank_tol)
    # U has orthonormal columns in both variants, so U^+ = U^*
    V = U.conj().T @ M
    return LowRankFactors(U, V, r)


def _sketch_right(M, H, counter):
    if isinstance(M, EntryOracle):
        if isinstance(H, SubIdentity) and H.axis == "cols":
            return M.cols(H.indices)
        M = M.dense()
    return _as_operator_apply(H, M, "right", counter)


def _sketch_left(F, M, counter):
    if isinstance(M, EntryOracle):
        if isinstance(F, SubIdentity) and F.axis == "rows":
            return M.rows(F.indices)
        M = M.dense()
    return _as_operator_apply(F, M, "left", counter)


def lra_premult(M, F, H, r: int, variant: str = "a", rank_tol: float = RANK_TOL,
                counter=None) -> LowRankFactors:
    """Range finder with V = (FU)^+ (FM) for a k x m sketch F.

    M may be an EntryOracle; with sub-identity F and H only the selected
    rows and columns are read.
    """
    if not isinstance(M, EntryOracle):
        M = np.asarray(M)
    k, l = F.shape[0], H.shape[1]
    if not r <= l <= k <= M.shape[0]:
        raise DimensionError("need r <= l <= k <= m")
    MH = _sketch_right(M, H, counter)
    U = _range_basis(MH, r, variant, rank_tol)
    FU = _as_operator_apply(F, U, "left", counter)
    if numerical_rank(FU, rank_tol, relative=True) < r:
        raise PremultRankFailure(f"FU has numerical rank below {r}")
    FM = _sketch_left(F, M, counter)
    V = pseudo_inverse(FU, rank_tol) @ FM
    if np.isrealobj(FM) and np.iscomplexobj(V):
        V = V.real
    return LowRankFactors(U, V, r)


def two_stage_truncate(f: LowRankFactors, r: int) -> LowRankFactors:
    """Rank-r factors of UV from QR of U and an SVD of the small R V."""
    if r > f.l:
        raise DimensionError("r exceeds the inner dimension")
    U = f.U
    if U.shape[0] >= U.shape[1]:
        Q, R = thin_qr(U)
    else:
        Q, R = np.eye(U.shape[0]), U
    s = svd(R @ f.V)
    r_eff = min(r, s.rank)
    return LowRankFactors(Q @ (s.S[:, :r_eff] * s.Sigma[:r_eff]), s.T[:, :r_eff].conj().T, r_eff)


def deterministic_error_diagnostic(M, H, r: int, slack: float = 1e-6) -> tuple[float, float]:
    """Bound ||Sigma2||^2 + ||Sigma2 C2 C1^+||^2 and the achieved squared error.

    C1 = T1^* H and C2 = T2^* H come from the full SVD of M split at r.  The
    achieved value is ||M - UV||^2 for range_finder variant a.
    """
    M = np.asarray(M)
    if max(M.shape) > DIAGNOSTIC_CAP:
        raise CapExceeded("matrix too large for the dense diagnostic")
    full = svd(M, full=True)
    n = M.shape[1]
    sig = np.zeros(n)
    sig[:full.Sigma.size] = full.Sigma
    T = full.T
    Hd = _as_operator_apply(H, np.eye(n), "right") if isinstance(H, SketchOperator) else np.asarray(H)
    C1 = T[:, :r].T @ Hd
    C2 = T[:, r:].T @ Hd
    S2 = np.diag(sig[r:])
    bound = spectral_norm(S2) ** 2 + spectral_norm(S2 @ C2 @ pseudo_inverse(C1)) ** 2
    f = range_finder(M, H, r, "a")
    achieved = spectral_norm(M - f.product()) ** 2
    floor = (1e-12 * max(sig[0], 1e-300)) ** 2
    if achieved > bound * (1 + slack) + floor:
        raise AssertionError(f"deterministic bound violated: {achieved} > {bound}")
    return float(bound), float(achieved)


def posterior_error_estimate(M, f: LowRankFactors, q: int, s: int, rng=None,
                             level: float = 0.95, counter=None) -> LraErrorEstimate:
    """Estimate ||M - UV||_F from a random q x s grid of the error matrix.

    Reads exactly q*s entries of M.  The interval treats the sampled errors
    as zero-mean Gaussian and inverts the chi-square law of their sum of
    squares; it is reported only when q*s >= 100.
    """
    oracle = as_oracle(M)
    m, n = oracle.shape
    if not (1 <= q <= m and 1 <= s <= n and q * s >= 2):
        raise DimensionError("invalid sample grid")
    rng = make_rng(rng)
    I = np.sort(rng.choice(m, q, replace=False))
    J = np.sort(rng.choice(n, s, replace=False))
    approx = f.U[I] @ f.V[:, J]
    _count(counter, 2 * q * s * f.l)
    E = oracle.block(I, J) - approx
    K = q * s
    msq = float(np.mean(np.abs(E) ** 2))
    est = float(np.sqrt(m * n * msq))
    ci = None
    if K >= 100:
        a = (1 - level) / 2
        lo = np.sqrt(m * n * K * msq / stats.chi2.ppf(1 - a, K))
        hi = np.sqrt(m * n * K * msq / stats.chi2.ppf(a, K))
        ci = (float(min(lo, est)), float(max(hi, est)))
    return LraErrorEstimate(est, q, s, ci)


def impact_factor(U, F) -> tuple[float, float]:
    """||I - U (FU)^+ F|| and its bound 1 + ||U|| ||(FU)^+|| ||F|| (dense check)."""
    U = np.asarray(U)
    Fd = np.asarray(F)
    FUp = pseudo_inverse(Fd @ U)
    P = np.eye(U.shape[0]) - U @ FUp @ Fd
    return spectral_norm(P), 1 + spectral_norm(U) * spectral_norm(FUp) * spectral_norm(Fd)


__all__ = ["LowRankFactors", "LraErrorEstimate", "range_finder", "lra_premult",
           "two_stage_truncate", "deterministic_error_diagnostic", "posterior_error_estimate",
           "impact_factor", "EntryOracle"]
