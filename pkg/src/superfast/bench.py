"""Benchmark harness: multiplier factories, seeded trials and CSV output."""
from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import multipliers as mu

LSR_MULTIPLIERS = ("gaussian", "asph", "circulant", "householder", "bidiagonal", "subidentity")
LRA_MULTIPLIERS = ("gaussian", "ah", "asph", "af", "aspf", "circulant", "bidiagonal",
                   "householder", "subidentity")


def trial_seed(master: int, trial: int) -> int:
    """Deterministic 63-bit seed derived from (master seed, trial index)."""
    return int(np.random.SeedSequence([int(master), int(trial)]).generate_state(1, np.uint64)[0] >> 1)


def lsr_multiplier(name: str, k: int, m: int, rng, d: int = 3) -> mu.SketchOperator:
    """k x m left multiplier of the named family."""
    if name == "gaussian":
        return mu.gen_gaussian(k, m, rng)
    if name == "asph":
        return mu.take_rows(mu.gen_asph(m, d, rng), k, "random", rng)
    if name == "circulant":
        return mu.take_rows(mu.gen_sparse_circulant(m, m, rng), k, "random", rng)
    if name == "householder":
        return mu.take_rows(mu.gen_householder_chain(m, max(1, k // 2), rng), k, "random", rng)
    if name == "bidiagonal":
        op = mu.Product([mu.gen_permutation(m, rng), mu.gen_bidiagonal_sum(m, rng)])
        return mu.take_rows(op, k, "random", rng)
    if name == "subidentity":
        return mu.take_rows(mu.gen_permutation(m, rng), k, "leftmost")
    raise ValueError(f"unknown LSR multiplier {name!r}")


def lra_multiplier(name: str, n: int, l: int, rng, d: int = 3, s: int = 4) -> mu.SketchOperator:
    """n x l right multiplier of the named family (leftmost l columns of square ops)."""
    if name == "gaussian":
        return mu.gen_gaussian(n, l, rng)
    if name == "ah":
        return mu.take_columns(mu.AbridgedHadamard(n, d), l)
    if name == "asph":
        return mu.take_columns(mu.gen_asph(n, d, rng), l)
    if name == "af":
        return mu.take_columns(mu.AbridgedFourier(n, d), l)
    if name == "aspf":
        return mu.take_columns(mu.gen_aspf(n, d, rng), l)
    if name == "circulant":
        return mu.take_columns(mu.gen_sparse_circulant(n, min(s, n), rng), l, "random", rng)
    if name == "bidiagonal":
        return mu.take_columns(mu.gen_inverse_bidiagonal(n, rng), l, "random", rng)
    if name == "householder":
        return mu.take_columns(mu.gen_householder_chain(n, max(1, l // 2), rng), l, "random", rng)
    if name == "subidentity":
        return mu.take_columns(mu.gen_permutation(n, rng), l)
    raise ValueError(f"unknown LRA multiplier {name!r}")


def run_trials(fn: Callable[[int], dict], trials: int, seed: int, workers: int = 1) -> list[dict]:
    """Call fn(trial_seed) for each trial; results come back in trial order."""
    seeds = [trial_seed(seed, i) for i in range(trials)]
    if workers <= 1:
        return [fn(s) for s in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))


@dataclass
class BenchRow:
    input: str
    algorithm: str
    m: int
    n: int
    r: int = 0
    k: int = 0
    l: int = 0
    mean: float = float("nan")
    std: float = 0.0
    failures: int = 0
    trials: int = 0
    reads: int = 0
    seed: int = 0
    runtime: float | None = None
    extra: dict = field(default_factory=dict)


CSV_COLUMNS = ("input", "algorithm", "m", "n", "r", "k", "l", "trials", "failures",
               "mean", "std", "reads", "seed")


def summarize(values, failures=0):
    v = np.asarray([x for x in values if x is not None], dtype=float)
    if v.size == 0:
        return float("nan"), 0.0
    return float(v.mean()), float(v.std())


def _g6(x):
    return f"{x:.6g}"


def rows_to_csv(rows: list[BenchRow], timing: bool = False) -> str:
    buf = io.StringIO()
    cols = CSV_COLUMNS + (("runtime",) if timing else ())
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        rec = {"input": r.input, "algorithm": r.algorithm, "m": r.m, "n": r.n, "r": r.r,
               "k": r.k, "l": r.l, "trials": r.trials, "failures": r.failures,
               "mean": _g6(r.mean), "std": _g6(r.std), "reads": r.reads, "seed": str(r.seed)}
        if timing:
            rec["runtime"] = _g6(r.runtime or 0.0)
        w.writerow([rec[c] for c in cols])
    return buf.getvalue()


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
