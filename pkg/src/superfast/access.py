"""Entry-oracle wrapper with read accounting, and a simple flop counter."""
from __future__ import annotations

from typing import Callable

import numpy as np


class OpCounter:
    """Accumulates arithmetic-operation estimates reported by kernels."""

    def __init__(self):
        self.flops = 0

    def add(self, n):
        self.flops += int(n)

    def reset(self):
        self.flops = 0


def _count(counter, n):
    if counter is not None:
        counter.add(n)


class EntryOracle:
    """Read-only access to an m x n matrix that counts every entry read.

    `source` is either a dense array or a vectorised function f(I, J) that
    returns the block of entries at rows I and columns J (I, J broadcastable
    integer arrays).  `reads` counts entries returned, duplicates included.
    """

    def __init__(self, source, shape=None):
        if callable(source) and not isinstance(source, np.ndarray):
            if shape is None:
                raise ValueError("shape is required for a function oracle")
            self._fn: Callable | None = source
            self._dense = None
            self.shape = tuple(shape)
        else:
            self._dense = np.asarray(source)
            self._fn = None
            self.shape = self._dense.shape
        self.reads = 0
        self.touched: set | None = None

    @property
    def dtype(self):
        return self._dense.dtype if self._dense is not None else np.float64

    def track(self):
        """Start recording the set of distinct positions read."""
        self.touched = set()
        return self

    def _record(self, I, J):
        if self.touched is not None:
            II, JJ = np.broadcast_arrays(I, J)
            self.touched.update(zip(II.ravel().tolist(), JJ.ravel().tolist()))

    def entries(self, I, J) -> np.ndarray:
        """Entries at paired positions (I[t], J[t])."""
        I = np.asarray(I, dtype=np.intp)
        J = np.asarray(J, dtype=np.intp)
        self.reads += int(np.broadcast(I, J).size)
        self._record(I, J)
        if self._dense is not None:
            return self._dense[I, J]
        return np.asarray(self._fn(I, J), dtype=float)

    def block(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.intp).ravel()
        cols = np.asarray(cols, dtype=np.intp).ravel()
        return self.entries(rows[:, None], cols[None, :])

    def rows(self, rows) -> np.ndarray:
        return self.block(rows, np.arange(self.shape[1]))

    def cols(self, cols) -> np.ndarray:
        return self.block(np.arange(self.shape[0]), cols)

    def dense(self) -> np.ndarray:
        return self.block(np.arange(self.shape[0]), np.arange(self.shape[1]))


def as_oracle(M) -> EntryOracle:
    return M if isinstance(M, EntryOracle) else EntryOracle(np.asarray(M))
