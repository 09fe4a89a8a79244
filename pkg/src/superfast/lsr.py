"""Sketch-and-solve least squares."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, SketchRankFailure
from .linalg import make_rng, numerical_rank
from .multipliers import Product, SketchOperator, SubIdentity, apply, gen_gaussian


@dataclass
class LsrProblem:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        if self.A.ndim == 1:
            self.A = self.A[:, None]
        self.b = np.asarray(self.b, dtype=float).ravel()
        m, d = self.A.shape
        if not m > d >= 1:
            raise DimensionError("need m > d >= 1")
        if self.b.size != m:
            raise DimensionError("b has the wrong length")

    @property
    def W(self) -> np.ndarray:
        return np.column_stack((self.A, self.b))


@dataclass
class LsrReport:
    x_hat: np.ndarray
    sketched_residual: float
    k: int
    multiplier: dict | None = None
    true_residual: float | None = None
    ratio: float | None = None
    attempts: int = 1
    accepted: bool = True
    flags: list = field(default_factory=list)


def solve_exact(p: LsrProblem) -> np.ndarray:
    """Minimum-norm least-squares solution A^+ b."""
    return np.linalg.lstsq(p.A, p.b, rcond=None)[0]


def _qr_solve(FW, d):
    """Minimize ||FA x - Fb|| from the QR factor of the k x (d+1) sketch FW."""
    R = np.linalg.qr(FW, mode="r")
    R11, r12 = R[:d, :d], R[:d, d]
    x = np.linalg.solve(R11, r12)
    res = abs(R[d, d]) if R.shape[0] > d else 0.0
    return x, float(res)


def sketch_solve(p: LsrProblem, F: SketchOperator, k: int | None = None,
                 rank_tol: float = 1e-12, counter=None) -> LsrReport:
    """Solve min ||F(Ax - b)|| for a k x m sketch F."""
    m, d = p.A.shape
    if F.cols != m:
        raise DimensionError("F has the wrong number of columns")
    k = F.rows if k is None else k
    if k != F.rows or not d < k <= m:
        raise DimensionError(f"need d < k <= m and k == F.rows (k={k})")
    if isinstance(F, SubIdentity) and F.axis == "rows":
        FW = p.W[F.indices]
    else:
        FW = apply(F, p.W, "left", counter)
    if np.iscomplexobj(FW):
        FW = np.vstack((FW.real, FW.imag))
    if numerical_rank(FW[:, :d], rank_tol, relative=True) < d:
        raise SketchRankFailure(f"sketch FA has numerical rank below {d}")
    x, sres = _qr_solve(FW, d)
    true_res = float(np.linalg.norm(p.A @ x - p.b))
    return LsrReport(x, sres, k, F.to_dict() if F.rows * F.cols <= 4096 else {"kind": F.kind},
                     true_residual=true_res, ratio=residual_ratio(p, x))


def residual_ratio(p: LsrProblem, x_hat) -> float:
    """||A x_hat - b|| / min_x ||Ax - b||, or +inf when the optimum is ~0."""
    opt = np.linalg.norm(p.A @ solve_exact(p) - p.b)
    got = np.linalg.norm(p.A @ np.asarray(x_hat) - p.b)
    if opt < 1e-14 * np.linalg.norm(p.b):
        return 1.0 if got < 1e-14 * np.linalg.norm(p.b) else float("inf")
    return float(got / opt)


def _validation_ratio(p: LsrProblem, G: SketchOperator, x_hat) -> float:
    """Residual of x_hat under sketch G relative to G's own optimum."""
    GW = apply(G, p.W, "left")
    d = p.A.shape[1]
    GA, Gb = GW[:, :d], GW[:, d]
    got = np.linalg.norm(GA @ x_hat - Gb)
    opt = np.linalg.norm(GA @ np.linalg.lstsq(GA, Gb, rcond=None)[0] - Gb)
    if opt <= 1e-14 * max(np.linalg.norm(Gb), 1e-300):
        return 1.0 if got <= 1e-12 * max(np.linalg.norm(Gb), 1e-300) else float("inf")
    return float(got / opt)


def solve_with_retries(p: LsrProblem, base_F: SketchOperator, Q_family: Sequence[SketchOperator],
                       max_retries: int = 3, accept_tol: float = 1.5,
                       validation: SketchOperator | Callable | None = None, rng=None) -> LsrReport:
    """Try F, then F Q_1, F Q_2, ... until an independent sketch validates the solution.

    `validation` is an operator or a callable rng -> operator; by default an
    independent Gaussian sketch with base_F.rows rows.
    """
    rng = make_rng(rng)
    m = p.A.shape[0]
    if validation is None:
        G = gen_gaussian(base_F.rows, m, rng)
    elif callable(validation) and not isinstance(validation, SketchOperator):
        G = validation(rng)
    else:
        G = validation
    best, best_score = None, float("inf")
    attempts = 0
    for i in range(max_retries + 1):
        if i == 0:
            F = base_F
        elif i - 1 < len(Q_family):
            F = Product([base_F, Q_family[i - 1]])
        else:
            break
        attempts += 1
        try:
            rep = sketch_solve(p, F)
        except SketchRankFailure:
            continue
        score = _validation_ratio(p, G, rep.x_hat)
        if score < best_score:
            best, best_score = rep, score
        if score <= accept_tol:
            rep.attempts = attempts
            return rep
    if best is None:
        d = p.A.shape[1]
        best = LsrReport(np.zeros(d), float(np.linalg.norm(p.b)), base_F.rows,
                         true_residual=float(np.linalg.norm(p.b)), ratio=residual_ratio(p, np.zeros(d)))
        best.flags.append("all attempts lost rank")
    best.attempts = attempts
    best.accepted = False
    best.flags.append("validation not reached")
    return best


def sketch_solve_best(p: LsrProblem, make_F: Callable, best_of: int = 1, rng=None) -> LsrReport:
    """Draw best_of multipliers from make_F(rng) and keep the smallest residual."""
    rng = make_rng(rng)
    best = None
    for _ in range(best_of):
        try:
            rep = sketch_solve(p, make_F(rng))
        except SketchRankFailure:
            continue
        if best is None or rep.true_residual < best.true_residual:
            best = rep
    if best is None:
        raise SketchRankFailure("every drawn multiplier lost rank")
    return best
