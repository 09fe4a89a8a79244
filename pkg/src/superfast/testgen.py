"""Input families for the benchmarks and tests."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import make_rng, orthonormal_basis, svd
from .lsr import LsrProblem
from .mmio import read_matrix_market, write_matrix_market  # noqa: F401


def gen_svd_profile(n: int, r: int, rng, tail: float = 1e-10) -> np.ndarray:
    """S diag(sigma) T^T with sigma_j = 1/j for j <= r and `tail` afterwards."""
    if not 0 < r < n:
        raise ValueError("need 0 < r < n")
    rng = make_rng(rng)
    S = orthonormal_basis(n, n, rng)
    T = orthonormal_basis(n, n, rng)
    sig = np.full(n, tail)
    sig[:r] = 1.0 / np.arange(1, r + 1)
    return (S * sig) @ T.T


def gen_factor_gaussian(m: int, n: int, r: int, noise: float, rng) -> np.ndarray:
    """G1 G2 + noise * G3 with Gaussian G1 (m x r), G2 (r x n), G3 (m x n)."""
    if not 1 <= r <= min(m, n):
        raise ValueError("need 1 <= r <= min(m, n)")
    rng = make_rng(rng)
    M = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
    if noise:
        M = M + noise * rng.standard_normal((m, n))
    return M


def _arc_integrals(targets, n, order):
    x, w = np.polynomial.legendre.leggauss(order)
    a = 2 * np.pi * np.arange(n) / n
    h = np.pi / n
    theta = (a + h)[None, :] + h * x[:, None]
    y = np.exp(1j * theta)
    vals = np.log(np.abs(targets[:, None, None] - y[None, :, :]))
    return np.einsum("iqj,q->ij", vals, w) * h


def gen_laplacian(n: int, order: int = 32, tol: float = 1e-12) -> np.ndarray:
    """Single-layer log potential from arcs of the unit circle to points 2 w^i.

    Entry (i, j) integrates log|2 w^i - y| over the j-th of n equal arcs
    (w = exp(2 pi i / n)); the matrix is scaled to unit spectral norm.
    """
    if n < 4:
        raise ValueError("need n >= 4")
    targets = 2 * np.exp(2j * np.pi * np.arange(n) / n)
    M = _arc_integrals(targets, n, order)
    while True:
        order *= 2
        M2 = _arc_integrals(targets, n, order)
        done = np.abs(M2 - M).max() < tol
        M = M2
        if done or order >= 512:
            break
    return M / np.linalg.norm(M, 2)


def fd_operator(g: int) -> np.ndarray:
    """Five-point second-difference operator on a g x g grid, Dirichlet boundary."""
    T = 2 * np.eye(g) - np.eye(g, k=1) - np.eye(g, k=-1)
    return np.kron(T, np.eye(g)) + np.kron(np.eye(g), T)


def gen_fd_inverse(m: int, n: int, rng=None) -> np.ndarray:
    """Off-diagonal m x n block of the inverse finite-difference operator, unit norm."""
    g = int(np.ceil(np.sqrt(2.5 * (m + n))))
    N = g * g
    gap = N - m - n
    off = int(make_rng(rng).integers(0, gap // 4 + 1)) if rng is not None else 0
    Li = np.linalg.inv(fd_operator(g))
    B = Li[off:off + m, N - n:]
    return B / np.linalg.norm(B, 2)


def gen_lsr_family(family: str, m: int, n: int, rng) -> LsrProblem:
    """A per family and b = A x0 + 0.01 * Gaussian noise."""
    if m <= n:
        raise ValueError("need m > n")
    rng = make_rng(rng)
    if family == "gaussian":
        A = rng.standard_normal((m, n))
    elif family == "illcond":
        lead = 10.0 ** np.arange(4, -10, -1)
        sig = np.full(n, 1e-10)
        sig[:min(n, lead.size)] = lead[:n]
        A = (orthonormal_basis(m, n, rng) * sig) @ orthonormal_basis(n, n, rng).T
    elif family == "semicoherent":
        h = n // 2
        A = np.zeros((m, n))
        A[:m - (n - h), :h] = rng.standard_normal((m - (n - h), h))
        A[m - (n - h):, h:] = np.diag(rng.standard_normal(n - h))
    elif family == "coherent":
        A = np.zeros((m, n))
        A[:n] = np.diag(rng.standard_normal(n))
    else:
        raise ValueError(f"unknown LSR family {family!r}")
    x0 = rng.standard_normal(n)
    b = A @ x0 + 0.01 * rng.standard_normal(m)
    return LsrProblem(A, b)


def coherence(A) -> float:
    """Maximum squared row norm of the left singular matrix."""
    A = np.asarray(A)
    if A.shape[0] < A.shape[1]:
        raise ValueError("need m >= n")
    S = svd(A).S
    return float((np.abs(S) ** 2).sum(axis=1).max())


def gen_delta(m, n, i, j) -> np.ndarray:
    if not (0 <= i < m and 0 <= j < n):
        raise ValueError("position out of range")
    M = np.zeros((m, n))
    M[i, j] = 1.0
    return M


def gen_shifted_delta(m, n, i, j) -> np.ndarray:
    return gen_delta(m, n, i, j) - 0.5


def _midpoints(n, a=0.0, b=1.0):
    return a + (b - a) * (np.arange(n) + 0.5) / n


def gen_gravity_like(n: int) -> np.ndarray:
    x = _midpoints(n)
    return (1.0 + (x[:, None] - x[None, :]) ** 2) ** -1.5 / n


def gen_shaw_like(n: int) -> np.ndarray:
    t = _midpoints(n, -np.pi / 2, np.pi / 2)
    c = np.cos(t)
    u = np.pi * (np.sin(t)[:, None] + np.sin(t)[None, :])
    return (c[:, None] + c[None, :]) ** 2 * np.sinc(u / np.pi) ** 2 * (np.pi / n)


def gen_hilbert_like(n: int) -> np.ndarray:
    x = _midpoints(n)
    return 1.0 / (x[:, None] + x[None, :] + 1.0) / n


def cauchy_nodes(n: int):
    """Interlaced nodes x_i = (i + 1/2)/n, y_j = j/n."""
    return (np.arange(n) + 0.5) / n, np.arange(n) / n


def cauchy_entries(n: int):
    """Vectorised entry function (I, J) -> 1/(x_I - y_J)."""
    x, y = cauchy_nodes(n)
    return lambda I, J: 1.0 / (x[I] - y[J])


def gen_cauchy_like(n: int) -> np.ndarray:
    x, y = cauchy_nodes(n)
    return 1.0 / (x[:, None] - y[None, :])


@dataclass
class InputSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int | None = None


def generate(spec: InputSpec) -> np.ndarray:
    """Dense matrix for an InputSpec (LSR families return A | b stacked)."""
    p = dict(spec.params)
    rng = make_rng(spec.seed)
    f = spec.family
    if f == "svd-profile":
        return gen_svd_profile(p["n"], p["r"], rng)
    if f == "factor-gaussian":
        return gen_factor_gaussian(p.get("m", p.get("n")), p["n"], p["r"], p.get("noise", 0.0), rng)
    if f == "laplacian":
        return gen_laplacian(p["n"])
    if f == "fd-inverse":
        return gen_fd_inverse(p["m"], p["n"], rng)
    if f == "gravity":
        return gen_gravity_like(p["n"])
    if f == "shaw":
        return gen_shaw_like(p["n"])
    if f == "hilbert":
        return gen_hilbert_like(p["n"])
    if f == "cauchy":
        return gen_cauchy_like(p["n"])
    if f == "delta":
        return gen_delta(p["m"], p["n"], p["i"], p["j"])
    if f == "shifted-delta":
        return gen_shifted_delta(p["m"], p["n"], p["i"], p["j"])
    if f in ("gaussian", "illcond", "semicoherent", "coherent"):
        prob = gen_lsr_family(f, p["m"], p["n"], rng)
        return np.column_stack((prob.A, prob.b))
    raise ValueError(f"unknown family {f!r}")


FAMILIES = ("svd-profile", "factor-gaussian", "laplacian", "fd-inverse", "gravity", "shaw",
            "hilbert", "cauchy", "delta", "shifted-delta", "gaussian", "illcond",
            "semicoherent", "coherent")
