"""Structured sketch operators applied without materialization.

Every operator knows how to apply itself and its transpose from the left;
right multiplication M @ op is computed as (op^T M^T)^T.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla
from scipy import stats

from .access import _count
from .errors import CapExceeded, DimensionError
from .linalg import make_rng

MATERIALIZE_CAP = 4096
ASPH_SCALES = (-4, -3, -2, -1, 1, 2, 3, 4)


def _plain(val):
    """JSON-friendly copy of a parameter value."""
    if isinstance(val, SketchOperator):
        return val.to_dict()
    if isinstance(val, np.ndarray):
        return val.tolist()
    if isinstance(val, (list, tuple)):
        return [_plain(v) for v in val]
    if isinstance(val, np.generic):
        return val.item()
    return val


class SketchOperator:
    kind = "abstract"
    # c such that op^* op = c I for orthogonal kinds, else None
    scale = None

    def __init__(self, rows: int, cols: int):
        self.rows = int(rows)
        self.cols = int(cols)

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def T(self):
        return Transposed(self)

    def _left(self, X, counter):
        raise NotImplementedError

    def _tleft(self, X, counter):
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        p = {key: _plain(val) for key, val in self.params().items()}
        return {"kind": self.kind, "shape": [self.rows, self.cols], "params": p}

    def __repr__(self):
        return f"{self.kind}({self.rows}x{self.cols})"


class Transposed(SketchOperator):
    kind = "Transposed"

    def __init__(self, inner: SketchOperator):
        super().__init__(inner.cols, inner.rows)
        self.inner = inner
        self.scale = inner.scale

    def _left(self, X, counter):
        return self.inner._tleft(X, counter)

    def _tleft(self, X, counter):
        return self.inner._left(X, counter)

    def params(self):
        return {"inner": self.inner}


class Permutation(SketchOperator):
    """(P X)[i] = X[perm[i]]."""

    kind = "Permutation"
    scale = 1.0

    def __init__(self, perm):
        perm = np.asarray(perm, dtype=np.intp)
        n = perm.size
        if not np.array_equal(np.sort(perm), np.arange(n)):
            raise DimensionError("not a permutation")
        super().__init__(n, n)
        self.perm = perm
        self.inv = np.empty_like(perm)
        self.inv[perm] = np.arange(n)

    def _left(self, X, counter):
        return X[self.perm]

    def _tleft(self, X, counter):
        return X[self.inv]

    def params(self):
        return {"perm": self.perm}


class SignDiagonal(SketchOperator):
    kind = "SignDiagonal"

    def __init__(self, d):
        d = np.asarray(d, dtype=float)
        if np.any(d == 0):
            raise DimensionError("diagonal scaling must be nonsingular")
        super().__init__(d.size, d.size)
        self.d = d
        self.scale = 1.0 if np.all(np.abs(d) == 1) else None

    def _left(self, X, counter):
        _count(counter, X.size)
        return self.d[:, None] * X

    _tleft = _left

    def params(self):
        return {"d": self.d}


def _check_abridged(n, d):
    if d < 0 or n % (2 ** d):
        raise DimensionError(f"n={n} is not a multiple of 2^{d}")


class AbridgedHadamard(SketchOperator):
    """H_{n,d}: d levels of H_2s = [[H_s, H_s], [H_s, -H_s]] over an identity core.

    Entries are +-1; op^T op = 2^d I.
    """

    kind = "AbridgedHadamard"

    def __init__(self, n: int, d: int):
        _check_abridged(n, d)
        super().__init__(n, n)
        self.d = int(d)
        self.scale = float(2 ** d)

    def _left(self, X, counter):
        n, c = X.shape
        Y = X
        for t in range(self.d):
            Y = Y.reshape(2 ** t, 2, n // 2 ** (t + 1), c)
            top, bot = Y[:, 0], Y[:, 1]
            Y = np.stack((top + bot, top - bot), axis=1)
            _count(counter, n * c)
        return Y.reshape(n, c)

    _tleft = _left

    def params(self):
        return {"n": self.rows, "d": self.d}


class AbridgedFourier(SketchOperator):
    """F_{n,d}: d radix-2 decimation-in-frequency levels over an identity core.

    F_2s = P [[F_s, F_s], [F_s W_s, -F_s W_s]] with twiddles W_s = diag(w^i),
    w = exp(2 pi i / 2s), and P interleaving the two halves.  With
    d = log2 n this is the DFT matrix (w^{ij}).
    """

    kind = "AbridgedFourier"

    def __init__(self, n: int, d: int):
        _check_abridged(n, d)
        super().__init__(n, n)
        self.d = int(d)
        self.scale = float(2 ** d)
        self._tw = {}
        L = n
        for _ in range(d):
            self._tw[L] = np.exp(2j * np.pi * np.arange(L // 2) / L)
            L //= 2

    def _rec(self, X, depth, counter):
        if depth == 0:
            return X
        L, c = X.shape
        s = L // 2
        a, b = X[:s], X[s:]
        y1 = self._rec(a + b, depth - 1, counter)
        y2 = self._rec(self._tw[L][:, None] * (a - b), depth - 1, counter)
        _count(counter, 3 * s * c)
        out = np.empty((L, c), dtype=complex)
        out[0::2] = y1
        out[1::2] = y2
        return out

    def _trec(self, X, depth, counter):
        if depth == 0:
            return X
        L, c = X.shape
        a = self._trec(X[0::2], depth - 1, counter)
        b = self._tw[L][:, None] * self._trec(X[1::2], depth - 1, counter)
        _count(counter, 3 * (L // 2) * c)
        return np.vstack((a + b, a - b))

    def _left(self, X, counter):
        return self._rec(X.astype(complex), self.d, counter)

    def _tleft(self, X, counter):
        return self._trec(X.astype(complex), self.d, counter)

    def params(self):
        return {"n": self.rows, "d": self.d}


class SparseCirculant(SketchOperator):
    """Z_f(v) = sum_t v_t Z_f^{p_t} for s nonzeros (p_t, v_t) of the first column.

    Z_f is the down-shift with f in the wraparound corner.  With many
    nonzeros the product is formed by FFT convolution instead of shifts.
    """

    kind = "SparseCirculant"
    fft_threshold = 32

    def __init__(self, n: int, positions, values, f: float = 1.0):
        positions = np.asarray(positions, dtype=np.intp)
        values = np.asarray(values, dtype=float)
        if positions.size != values.size or positions.size == 0:
            raise DimensionError("need matching nonempty positions and values")
        if positions.min() < 0 or positions.max() >= n or np.unique(positions).size != positions.size:
            raise DimensionError("bad circulant positions")
        if abs(abs(f) - 1) > 1e-12:
            raise DimensionError("f must have unit modulus")
        super().__init__(n, n)
        self.positions = positions
        self.values = values
        self.f = f

    @property
    def s(self):
        return self.positions.size

    def _shifts(self, X, counter, transpose):
        n = self.rows
        Y = np.zeros(X.shape, dtype=np.result_type(X, self.f))
        for p, v in zip(self.positions, self.values):
            if transpose:
                Z = np.roll(X, -p, axis=0)
                if p:
                    Z[n - p:] *= self.f
            else:
                Z = np.roll(X, p, axis=0)
                Z[:p] *= self.f
            Y += v * Z
        _count(counter, (2 * self.s - 1) * X.size)
        return Y

    def _fft(self, X, counter, transpose):
        n = self.rows
        theta = np.exp(1j * np.angle(self.f) / n) ** np.arange(n)
        col = np.zeros(n)
        col[self.positions] = self.values
        w = theta * col
        if transpose:
            w = np.roll(w[::-1], 1)
            Y = theta[:, None] * np.fft.ifft(np.fft.fft(w)[:, None] * np.fft.fft(X / theta[:, None], axis=0), axis=0)
        else:
            Y = np.fft.ifft(np.fft.fft(w)[:, None] * np.fft.fft(theta[:, None] * X, axis=0), axis=0) / theta[:, None]
        _count(counter, 15 * n * max(1, int(np.log2(n))) * X.shape[1])
        if np.isrealobj(X) and np.isrealobj(self.f):
            return Y.real
        return Y

    def _left(self, X, counter):
        if self.s > self.fft_threshold:
            return self._fft(X, counter, False)
        return self._shifts(X, counter, False)

    def _tleft(self, X, counter):
        if self.s > self.fft_threshold:
            return self._fft(X, counter, True)
        return self._shifts(X, counter, True)

    def params(self):
        return {"n": self.rows, "positions": self.positions, "values": self.values, "f": self.f}


class InverseBidiagonal(SketchOperator):
    """Inverse of the unit bidiagonal matrix with off-diagonal entries c.

    lower: (I + diag(c, -1))^{-1}; upper: (I + diag(c, +1))^{-1}.
    Applied by banded substitution.  For |c_i| = 1 the inverse has
    unit-modulus entries in a triangle, so its norm grows like n.
    """

    kind = "InverseBidiagonal"

    def __init__(self, c, orientation: str = "lower"):
        c = np.asarray(c, dtype=float)
        if orientation not in ("lower", "upper"):
            raise DimensionError("orientation must be lower or upper")
        n = c.size + 1
        super().__init__(n, n)
        self.c = c
        self.orientation = orientation

    def _solve(self, X, lower, counter):
        n = self.rows
        ab = np.zeros((2, n))
        if lower:
            ab[0] = 1
            ab[1, :-1] = self.c
            out = sla.solve_banded((1, 0), ab, X)
        else:
            ab[1] = 1
            ab[0, 1:] = self.c
            out = sla.solve_banded((0, 1), ab, X)
        _count(counter, 2 * (n - 1) * X.shape[1])
        return out

    def _left(self, X, counter):
        return self._solve(X, self.orientation == "lower", counter)

    def _tleft(self, X, counter):
        return self._solve(X, self.orientation != "lower", counter)

    def params(self):
        return {"c": self.c, "orientation": self.orientation}


class HouseholderChain(SketchOperator):
    """Product P_1 R_1 P_2 R_2 ... P_q R_q of permutations and reflectors."""

    kind = "HouseholderChain"
    scale = 1.0

    def __init__(self, ws, perms):
        ws = np.atleast_2d(np.asarray(ws, dtype=float))
        perms = np.atleast_2d(np.asarray(perms, dtype=np.intp))
        n = ws.shape[1]
        super().__init__(n, n)
        self.ws = ws / np.linalg.norm(ws, axis=1, keepdims=True)
        self.perms = [Permutation(p) for p in perms]

    def _reflect(self, w, X, counter):
        _count(counter, 4 * X.size)
        return X - 2.0 * np.outer(w, w @ X)

    def _left(self, X, counter):
        for w, P in zip(self.ws[::-1], self.perms[::-1]):
            X = P._left(self._reflect(w, X, counter), counter)
        return X

    def _tleft(self, X, counter):
        for w, P in zip(self.ws, self.perms):
            X = self._reflect(w, P._tleft(X, counter), counter)
        return X

    def params(self):
        return {"ws": self.ws, "perms": [p.perm for p in self.perms]}


class Dense(SketchOperator):
    """Materialized matrix operator (the Gaussian baseline)."""

    kind = "Dense"

    def __init__(self, A, kind: str = "Dense"):
        A = np.asarray(A)
        super().__init__(*A.shape)
        self.A = A
        self.kind = kind

    def _left(self, X, counter):
        _count(counter, 2 * self.A.size * X.shape[1])
        return self.A @ X

    def _tleft(self, X, counter):
        _count(counter, 2 * self.A.size * X.shape[1])
        return self.A.T @ X

    def params(self):
        return {"A": self.A}


class SubIdentity(SketchOperator):
    """Rows (axis='rows', k x dim) or columns (axis='cols', dim x k) of I_dim."""

    kind = "SubIdentity"
    scale = 1.0

    def __init__(self, indices, dim: int, axis: str = "rows"):
        idx = np.asarray(indices, dtype=np.intp)
        if idx.size and (idx.min() < 0 or idx.max() >= dim or np.unique(idx).size != idx.size):
            raise DimensionError("bad sub-identity indices")
        if axis not in ("rows", "cols"):
            raise DimensionError("axis must be rows or cols")
        super().__init__(*((idx.size, dim) if axis == "rows" else (dim, idx.size)))
        self.indices = idx
        self.dim = int(dim)
        self.axis = axis

    def _gather(self, X):
        return X[self.indices]

    def _scatter(self, X):
        out = np.zeros((self.dim,) + X.shape[1:], dtype=X.dtype)
        out[self.indices] = X
        return out

    def _left(self, X, counter):
        return self._gather(X) if self.axis == "rows" else self._scatter(X)

    def _tleft(self, X, counter):
        return self._scatter(X) if self.axis == "rows" else self._gather(X)

    def params(self):
        return {"indices": self.indices, "dim": self.dim, "axis": self.axis}


class Sum(SketchOperator):
    kind = "Sum"

    def __init__(self, ops, signs=None):
        ops = list(ops)
        if not ops or any(o.shape != ops[0].shape for o in ops):
            raise DimensionError("summands must share a shape")
        super().__init__(*ops[0].shape)
        self.ops = ops
        self.signs = np.ones(len(ops)) if signs is None else np.asarray(signs, dtype=float)

    def _combine(self, parts, counter):
        out = self.signs[0] * parts[0]
        for s, p in zip(self.signs[1:], parts[1:]):
            out = out + s * p
            _count(counter, p.size)
        return out

    def _left(self, X, counter):
        return self._combine([o._left(X, counter) for o in self.ops], counter)

    def _tleft(self, X, counter):
        return self._combine([o._tleft(X, counter) for o in self.ops], counter)

    def params(self):
        return {"ops": self.ops, "signs": self.signs}


class Product(SketchOperator):
    """ops[0] @ ops[1] @ ... @ ops[-1]."""

    kind = "Product"

    def __init__(self, ops):
        ops = list(ops)
        for a, b in zip(ops, ops[1:]):
            if a.cols != b.rows:
                raise DimensionError("factors are not conformable")
        super().__init__(ops[0].rows, ops[-1].cols)
        self.ops = ops
        if all(o.scale is not None for o in ops):
            self.scale = float(np.prod([o.scale for o in ops]))

    def _left(self, X, counter):
        for o in reversed(self.ops):
            X = o._left(X, counter)
        return X

    def _tleft(self, X, counter):
        for o in self.ops:
            X = o._tleft(X, counter)
        return X

    def params(self):
        return {"ops": self.ops}


class ColumnSlice(SketchOperator):
    kind = "ColumnSlice"

    def __init__(self, inner: SketchOperator, indices):
        idx = np.asarray(indices, dtype=np.intp)
        super().__init__(inner.rows, idx.size)
        self.inner = inner
        self.indices = idx

    def _left(self, X, counter):
        Z = np.zeros((self.inner.cols,) + X.shape[1:], dtype=X.dtype)
        Z[self.indices] = X
        return self.inner._left(Z, counter)

    def _tleft(self, X, counter):
        return self.inner._tleft(X, counter)[self.indices]

    def params(self):
        return {"inner": self.inner, "indices": self.indices}


class RowSlice(SketchOperator):
    kind = "RowSlice"

    def __init__(self, inner: SketchOperator, indices):
        idx = np.asarray(indices, dtype=np.intp)
        super().__init__(idx.size, inner.cols)
        self.inner = inner
        self.indices = idx

    def _left(self, X, counter):
        return self.inner._left(X, counter)[self.indices]

    def _tleft(self, X, counter):
        Z = np.zeros((self.inner.rows,) + X.shape[1:], dtype=X.dtype)
        Z[self.indices] = X
        return self.inner._tleft(Z, counter)

    def params(self):
        return {"inner": self.inner, "indices": self.indices}


def apply(op: SketchOperator, M, side: str = "left", counter=None) -> np.ndarray:
    """op @ M (side='left') or M @ op (side='right')."""
    M = np.asarray(M)
    vec = M.ndim == 1
    if side == "left":
        X = M.reshape(-1, 1) if vec else M
        if X.shape[0] != op.cols:
            raise DimensionError(f"{op!r} cannot left-multiply {X.shape}")
        out = op._left(X, counter)
        return out.ravel() if vec else out
    if side == "right":
        X = M.reshape(1, -1) if vec else M
        if X.shape[1] != op.rows:
            raise DimensionError(f"{op!r} cannot right-multiply {X.shape}")
        out = op._tleft(X.T, counter).T
        return out.ravel() if vec else out
    raise ValueError("side must be left or right")


def materialize(op: SketchOperator, cap: int = MATERIALIZE_CAP) -> np.ndarray:
    if max(op.shape) > cap:
        raise CapExceeded(f"operator {op.shape} exceeds materialization cap {cap}")
    return op._left(np.eye(op.cols), None)


def _unit_column_rows(op):
    """For square 0/1 operators with one unit per column: row of the unit in each column."""
    if isinstance(op, Permutation):
        return op.inv
    if isinstance(op, SubIdentity) and op.rows == op.cols:
        if op.axis == "cols":
            return op.indices
        inv = np.empty_like(op.indices)
        inv[op.indices] = np.arange(op.dim)
        return inv
    return None


def _pick(total, count, mode, rng):
    if count > total or count < 1:
        raise DimensionError(f"cannot take {count} of {total}")
    if mode == "leftmost":
        return np.arange(count)
    if mode == "random":
        return np.sort(make_rng(rng).choice(total, count, replace=False))
    raise ValueError("mode must be leftmost or random")


def take_columns(op: SketchOperator, l: int, mode: str = "leftmost", rng=None) -> SketchOperator:
    idx = _pick(op.cols, l, mode, rng)
    units = _unit_column_rows(op)
    if units is not None:
        return SubIdentity(units[idx], op.rows, axis="cols")
    return ColumnSlice(op, idx)


def take_rows(op: SketchOperator, k: int, mode: str = "leftmost", rng=None) -> SketchOperator:
    idx = _pick(op.rows, k, mode, rng)
    if isinstance(op, Permutation):
        return SubIdentity(op.perm[idx], op.cols, axis="rows")
    if isinstance(op, SubIdentity) and op.axis == "rows":
        return SubIdentity(op.indices[idx], op.dim, axis="rows")
    return RowSlice(op, idx)


# generators, one per kind

def gen_permutation(n, rng) -> Permutation:
    return Permutation(make_rng(rng).permutation(n))


def gen_sign_diagonal(n, rng, values=(-1.0, 1.0)) -> SignDiagonal:
    return SignDiagonal(make_rng(rng).choice(np.asarray(values, dtype=float), n))


def gen_abridged_hadamard(n, d, rng=None) -> AbridgedHadamard:
    return AbridgedHadamard(n, d)


def gen_abridged_fourier(n, d, rng=None) -> AbridgedFourier:
    return AbridgedFourier(n, d)


def gen_sparse_circulant(n, s, rng, f=1.0) -> SparseCirculant:
    if not 1 <= s <= n:
        raise DimensionError("need 1 <= s <= n")
    rng = make_rng(rng)
    pos = np.sort(rng.choice(n, s, replace=False))
    return SparseCirculant(n, pos, rng.choice([-1.0, 1.0], s), f)


def gen_inverse_bidiagonal(n, rng, orientation="lower") -> InverseBidiagonal:
    return InverseBidiagonal(make_rng(rng).choice([-1.0, 1.0], n - 1), orientation)


def gen_householder_chain(n, q, rng) -> HouseholderChain:
    rng = make_rng(rng)
    ws = rng.standard_normal((q, n))
    perms = np.array([rng.permutation(n) for _ in range(q)])
    return HouseholderChain(ws, perms)


def gen_gaussian(m, n, rng) -> Dense:
    return Dense(make_rng(rng).standard_normal((m, n)), kind="Gaussian")


def gen_asph(n, d, rng, scales=ASPH_SCALES) -> Product:
    """P D H_{n,d} with D drawn from a nonzero scale set."""
    rng = make_rng(rng)
    P = gen_permutation(n, rng)
    D = gen_sign_diagonal(n, rng, scales)
    return Product([P, D, AbridgedHadamard(n, d)])


def gen_aspf(n, d, rng, scales=(-1.0, 1.0)) -> Product:
    rng = make_rng(rng)
    P = gen_permutation(n, rng)
    D = gen_sign_diagonal(n, rng, scales)
    return Product([P, D, AbridgedFourier(n, d)])


def gen_bidiagonal_sum(n, rng) -> Sum:
    """Sum of lower and upper inverse bidiagonal operators, +-1 off-diagonals."""
    rng = make_rng(rng)
    return Sum([gen_inverse_bidiagonal(n, rng, "lower"), gen_inverse_bidiagonal(n, rng, "upper")])


_KINDS = {
    "Permutation": lambda p, s: Permutation(p["perm"]),
    "SignDiagonal": lambda p, s: SignDiagonal(p["d"]),
    "AbridgedHadamard": lambda p, s: AbridgedHadamard(p["n"], p["d"]),
    "AbridgedFourier": lambda p, s: AbridgedFourier(p["n"], p["d"]),
    "SparseCirculant": lambda p, s: SparseCirculant(p["n"], p["positions"], p["values"], p["f"]),
    "InverseBidiagonal": lambda p, s: InverseBidiagonal(p["c"], p["orientation"]),
    "HouseholderChain": lambda p, s: HouseholderChain(p["ws"], p["perms"]),
    "SubIdentity": lambda p, s: SubIdentity(p["indices"], p["dim"], p["axis"]),
    "Sum": lambda p, s: Sum([from_dict(o) for o in p["ops"]], p["signs"]),
    "Product": lambda p, s: Product([from_dict(o) for o in p["ops"]]),
    "ColumnSlice": lambda p, s: ColumnSlice(from_dict(p["inner"]), p["indices"]),
    "RowSlice": lambda p, s: RowSlice(from_dict(p["inner"]), p["indices"]),
    "Transposed": lambda p, s: Transposed(from_dict(p["inner"])),
}


def from_dict(desc: dict) -> SketchOperator:
    kind = desc["kind"]
    if kind in _KINDS:
        return _KINDS[kind](desc["params"], desc.get("shape"))
    return Dense(np.asarray(desc["params"]["A"]), kind=kind)


# bidiagonal products drifting towards Gaussian

def _bidiagonal_factors(n, T, rng):
    rng = make_rng(rng)
    signs = [rng.choice([-1.0, 1.0], n) for _ in range(T)]
    perms = [rng.permutation(n) for _ in range(T)]
    return signs, perms


def _standardize_columns(X):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return (X - mu) / sd


def gen_bidiagonal_product(n: int, T: int, rng, standardize: bool = True) -> np.ndarray:
    """Dense product of T factors B_t P_t.

    B_t has unit diagonal, +-1 subdiagonal and a +-1 entry in the top-right
    corner; P_t is a random column permutation.  Columns are standardized to
    zero mean and unit variance unless `standardize` is False.
    """
    signs, perms = _bidiagonal_factors(n, T, rng)
    X = np.eye(n)
    for s, perm in zip(signs, perms):
        # X @ B: column j gains s[j+1] * column j+1, last column gains the corner
        X = X + np.roll(X, -1, axis=1) * np.roll(s, -1)[None, :]
        X = X[:, perm]
    return _standardize_columns(X) if standardize else X


def bidiagonal_product_column(n: int, T: int, j: int, rng, standardize: bool = True) -> np.ndarray:
    """Column j of gen_bidiagonal_product(n, T, rng) computed in O(nT)."""
    signs, perms = _bidiagonal_factors(n, T, rng)
    v = np.zeros(n)
    v[j] = 1.0
    for s, perm in zip(reversed(signs), reversed(perms)):
        w = np.empty(n)
        w[perm] = v
        v = w + s * np.roll(w, 1)
    if standardize:
        v = _standardize_columns(v[:, None])[:, 0]
    return v


def ks_normality(sample) -> tuple[float, bool]:
    """KS distance of the standardized sample from N(0,1); passes below 1.36/sqrt(N)."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 30:
        raise ValueError("need at least 30 samples")
    sd = x.std()
    if sd == 0:
        raise ValueError("degenerate sample with zero variance")
    z = (x - x.mean()) / sd
    stat = float(stats.kstest(z, "norm").statistic)
    return stat, stat < 1.36 / np.sqrt(x.size)
