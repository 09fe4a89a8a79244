"""Leverage-score sampling and leverage-score CUR."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .access import as_oracle
from .cur import (CurDecomposition, collapse_duplicates, lra_to_top_svd, truncated_nucleus)
from .errors import DimensionError, EmptySample, GeneratorRankFailure
from .linalg import RANK_TOL, LowRankFactors, make_rng, numerical_rank, svd

EMPTY_RETRIES = 8


@dataclass
class LeverageScores:
    p: np.ndarray
    beta: float = 1.0
    r: int | None = None

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if np.any(self.p < 0) or abs(self.p.sum() - 1) > 1e-12 * max(1, self.p.size):
            raise ValueError("scores must be nonnegative and sum to 1")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")


@dataclass
class SampleRescale:
    S: np.ndarray
    D: np.ndarray
    mode: str


def _p(scores):
    return scores.p if isinstance(scores, LeverageScores) else np.asarray(scores, dtype=float)


def svd_leverage_scores(T_r, beta: float = 1.0) -> LeverageScores:
    """p_j = ||t_j||^2 / r from an n x r matrix with orthonormal columns."""
    T_r = np.asarray(T_r)
    r = T_r.shape[1]
    if np.linalg.norm(T_r.conj().T @ T_r - np.eye(r)) > 1e-8:
        raise ValueError("T_r must have orthonormal columns")
    p = (np.abs(T_r) ** 2).sum(axis=1) / r
    return LeverageScores(p / p.sum(), beta, r)


def scores_satisfy(scores: LeverageScores, T_r) -> bool:
    """Check p_j >= (beta / r) ||t_j||^2 for every j."""
    T_r = np.asarray(T_r)
    need = scores.beta * (np.abs(T_r) ** 2).sum(axis=1) / T_r.shape[1]
    return bool(np.all(scores.p >= need - 1e-15))


def uniform_scores(n: int) -> LeverageScores:
    return LeverageScores(np.full(n, 1.0 / n))


def sample_exactly(scores, l: int, rng) -> SampleRescale:
    """l i.i.d. draws from p; selection t rescaled by 1/sqrt(l p_{i_t})."""
    if l < 1:
        raise DimensionError("l must be positive")
    p = _p(scores)
    idx = make_rng(rng).choice(p.size, l, replace=True, p=p)
    return SampleRescale(idx, 1.0 / np.sqrt(l * p[idx]), "exactly")


def sample_expected(scores, l: int, rng, retries: int = EMPTY_RETRIES) -> SampleRescale:
    """Keep index j with probability min(1, l p_j); rescale by 1/min(1, sqrt(l p_j))."""
    if l < 1:
        raise DimensionError("l must be positive")
    p = _p(scores)
    rng = make_rng(rng)
    prob = np.minimum(1.0, l * p)
    for _ in range(retries):
        idx = np.flatnonzero(rng.random(p.size) < prob)
        if idx.size:
            return SampleRescale(idx, 1.0 / np.minimum(1.0, np.sqrt(l * p[idx])), "expected")
    raise EmptySample(f"no index kept after {retries} attempts")


def epsilon_rld(r: int, l: int, delta: float) -> float:
    """sqrt(4 r ln(2r/delta) / l)."""
    return float(np.sqrt(4 * r * np.log(2 * r / delta) / l))


def l_minus_quadratic(r: int, eps: float, beta: float) -> float:
    """Sample size 3200 r^2 / (eps^2 beta)."""
    return 3200.0 * r * r / (eps * eps * beta)


def l_minus_loglinear(r: int, eps: float, beta: float, c_bar: float) -> float:
    """Sample size c_bar r ln(r) / (eps^2 beta)."""
    return c_bar * r * np.log(r) / (eps * eps * beta)


def _sample(scores, count, mode, rng):
    if mode == "exact":
        return sample_exactly(scores, count, rng)
    if mode == "expected":
        return sample_expected(scores, count, rng)
    raise ValueError("mode must be exact or expected")


def cur_via_leverage(M, r: int, k: int, l: int, beta: float = 1.0, beta_bar: float = 1.0,
                     mode: str = "exact", scores=None, rng=None, nucleus: str = "default",
                     rank_tol: float = RANK_TOL) -> CurDecomposition:
    """Leverage-score CUR.

    Columns are sampled from `scores` (from a dense SVD of M if omitted), rows
    from the leverage scores of the rescaled column sample C D.  The default
    nucleus is D (Dbar M[I,J] D)_r^+ Dbar; nucleus='alternative' uses
    (M[I,J])_r^+ on the distinct picks.
    """
    oracle = as_oracle(M)
    m, n = oracle.shape
    if not (r <= k and r <= l):
        raise DimensionError("need k, l >= r")
    rng = make_rng(rng)
    if scores is None:
        T_r = svd(oracle.dense()).T[:, :r]
        scores = svd_leverage_scores(T_r, beta)
    elif not isinstance(scores, LeverageScores):
        scores = LeverageScores(scores, beta, r)
    cs = _sample(scores, l, mode, rng)
    ucols, cinv = np.unique(cs.S, return_inverse=True)
    Cu = oracle.cols(ucols)
    CD = Cu[:, cinv] * cs.D[None, :]
    if not np.any(CD) or numerical_rank(CD, rank_tol, relative=True) < r:
        raise GeneratorRankFailure("sampled columns have numerical rank below r")
    row_scores = svd_leverage_scores(svd(CD).S[:, :r], beta_bar)
    rs = _sample(row_scores, k, mode, rng)
    if nucleus == "alternative":
        urows = np.unique(rs.S)
        G = Cu[urows]
        return CurDecomposition(urows, ucols, truncated_nucleus(G, r, rank_tol), r, "alternative")
    G = rs.D[:, None] * CD[rs.S]
    U = cs.D[:, None] * truncated_nucleus(G, r, rank_tol) * rs.D[None, :]
    I, J, U = collapse_duplicates(rs.S, cs.S, U)
    return CurDecomposition(I, J, U, r, "leverage")


def refine_lra(M, crude: LowRankFactors, r: int, k: int, l: int, rng=None,
               degrade_tol: float = 0.1, probe: int = 20) -> CurDecomposition:
    """Leverage-score CUR driven by the right singular vectors of a crude LRA.

    The crude LRA is checked on a probe x probe grid of sampled entries; when
    its relative error estimate exceeds degrade_tol the result is flagged
    with diagnostics['degraded'] = True.
    """
    oracle = as_oracle(M)
    m, n = oracle.shape
    if crude.r < r:
        raise DimensionError("crude LRA has target rank below r")
    rng = make_rng(rng)
    sv = lra_to_top_svd(crude.U, None, crude.V, r)
    scores = svd_leverage_scores(sv.T)
    cur = cur_via_leverage(oracle, r, k, l, scores=scores, rng=rng)
    I = np.sort(rng.choice(m, min(probe, m), replace=False))
    J = np.sort(rng.choice(n, min(probe, n), replace=False))
    B = oracle.block(I, J)
    err = np.linalg.norm(B - crude.U[I] @ crude.V[:, J])
    ref = np.linalg.norm(B)
    rel = err / ref if ref else (0.0 if err == 0 else float("inf"))
    cur.diagnostics["crude_relative_estimate"] = float(rel)
    cur.diagnostics["degraded"] = bool(rel > degrade_tol)
    return cur


def gaussian_score_gap(G) -> float:
    """max_j |p_j(G) - ||g_j||^2 / (n r)| for an r x n matrix G."""
    G = np.asarray(G, dtype=float)
    r, n = G.shape
    T = svd(G / np.sqrt(n)).T[:, :r]
    p = (T ** 2).sum(axis=1) / r
    return float(np.abs(p - (G ** 2).sum(axis=0) / (n * r)).max())
