"""MatrixMarket reader and writer for dense real matrices."""
from __future__ import annotations

import numpy as np


class MatrixMarketError(ValueError):
    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


_FIELDS = {"real", "integer", "double"}
_SYMMETRY = {"general", "symmetric", "skew-symmetric"}


def read_matrix_market(path) -> np.ndarray:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    head = lines[0].split()
    if len(head) != 5 or head[0].lower() != "%%matrixmarket" or head[1].lower() != "matrix":
        raise MatrixMarketError("bad banner", 1)
    fmt, field, sym = (h.lower() for h in head[2:])
    if fmt not in ("array", "coordinate"):
        raise MatrixMarketError(f"unsupported format {fmt}", 1)
    if field not in _FIELDS:
        raise MatrixMarketError(f"unsupported field {field}", 1)
    if sym not in _SYMMETRY:
        raise MatrixMarketError(f"unsupported symmetry {sym}", 1)

    body = [(no, ln.split()) for no, ln in enumerate(lines[1:], start=2)
            if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MatrixMarketError("missing size line", len(lines))
    no, size = body[0]
    try:
        dims = [int(x) for x in size]
    except ValueError:
        raise MatrixMarketError("bad size line", no) from None
    entries = body[1:]

    def num(tok, no):
        try:
            return float(tok)
        except ValueError:
            raise MatrixMarketError(f"bad number {tok!r}", no) from None

    if fmt == "array":
        if len(dims) != 2:
            raise MatrixMarketError("array size line needs 2 integers", no)
        m, n = dims
        A = np.zeros((m, n))
        if sym == "general":
            slots = [(i, j) for j in range(n) for i in range(m)]
        else:
            if m != n:
                raise MatrixMarketError("symmetric matrix must be square", no)
            start = 0 if sym == "symmetric" else 1
            slots = [(i, j) for j in range(n) for i in range(j + start, n)]
        if len(entries) != len(slots):
            last = entries[-1][0] if entries else no
            raise MatrixMarketError(f"expected {len(slots)} entries, found {len(entries)}", last)
        for (i, j), (lno, toks) in zip(slots, entries):
            if len(toks) != 1:
                raise MatrixMarketError("expected one value", lno)
            A[i, j] = num(toks[0], lno)
    else:
        if len(dims) != 3:
            raise MatrixMarketError("coordinate size line needs 3 integers", no)
        m, n, nnz = dims
        if len(entries) != nnz:
            last = entries[-1][0] if entries else no
            raise MatrixMarketError(f"expected {nnz} entries, found {len(entries)}", last)
        A = np.zeros((m, n))
        for lno, toks in entries:
            if len(toks) != 3:
                raise MatrixMarketError("expected 'row col value'", lno)
            try:
                i, j = int(toks[0]) - 1, int(toks[1]) - 1
            except ValueError:
                raise MatrixMarketError("bad index", lno) from None
            if not (0 <= i < m and 0 <= j < n):
                raise MatrixMarketError("index out of range", lno)
            A[i, j] += num(toks[2], lno)
    if sym == "symmetric":
        A = A + np.tril(A, -1).T
    elif sym == "skew-symmetric":
        A = A - np.tril(A, -1).T
    return A


def write_matrix_market(path, A, comment: str | None = None) -> None:
    """Write A in array/real/general format with round-trip precision."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("expected a matrix")
    m, n = A.shape
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix array real general\n")
        if comment:
            for ln in comment.splitlines():
                fh.write(f"% {ln}\n")
        fh.write(f"{m} {n}\n")
        for x in A.T.ravel():
            fh.write(repr(float(x)) + "\n")
