"""Command-line entry point: gen | lsr | lra | cur | leverage | hss | selftest."""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import acceptance, bench, cur, hss, leverage, lra, lsr, testgen
from .access import EntryOracle
from .bench import BenchRow, Timer, rows_to_csv, run_trials, summarize
from .errors import (GeneratorRankFailure, PremultRankFailure, RangeFailure, SelectionFailure,
                     SuperfastError)
from .linalg import spectral_norm, svd
from .mmio import read_matrix_market, write_matrix_market

SEED_ENV = "SUPERFAST_SEED"


def _default_seed():
    return int(os.environ.get(SEED_ENV, "0"))


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output", default=None, help="CSV path (default stdout)")
    p.add_argument("--timing", action="store_true", help="add a wall-clock runtime column")
    p.add_argument("--config", default=None, help="JSON file whose keys override options")


def _add_input(p):
    p.add_argument("--input", default=None, help="MatrixMarket file")
    p.add_argument("--family", default=None, choices=testgen.FAMILIES)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--r", type=int, default=8)
    p.add_argument("--noise", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="superfast", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a generated matrix as MatrixMarket")
    p.add_argument("--family", required=True, choices=testgen.FAMILIES)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, default=8)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--i", type=int, default=0)
    p.add_argument("--j", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--config", default=None)

    p = sub.add_parser("lsr", help="sketch-and-solve least squares")
    _add_common(p)
    p.add_argument("--input", default=None, help="MatrixMarket file holding [A | b]")
    p.add_argument("--family", default="gaussian", choices=("gaussian", "illcond", "semicoherent", "coherent"))
    p.add_argument("--m", type=int, default=4096)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--k", type=int, default=600)
    p.add_argument("--mult", default="gaussian", choices=bench.LSR_MULTIPLIERS)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--best-of", type=int, default=1)

    p = sub.add_parser("lra", help="range-finder low-rank approximation")
    _add_common(p)
    _add_input(p)
    p.add_argument("--mult", default="gaussian", choices=bench.LRA_MULTIPLIERS)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--k", type=int, default=None, help="premultiplier rows (enables the premult variant)")
    p.add_argument("--variant", default="a", choices=("a", "b"))

    p = sub.add_parser("cur", help="CUR approximation")
    _add_common(p)
    _add_input(p)
    p.add_argument("--algo", default="ca", choices=("primitive", "cynical", "ca", "svd2cur"))
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--p", type=int, default=None, help="cynical block rows")
    p.add_argument("--q", type=int, default=None, help="cynical block cols")
    p.add_argument("--loops", type=int, default=5)
    p.add_argument("--h", type=float, default=1.1)

    p = sub.add_parser("leverage", help="leverage-score CUR")
    _add_common(p)
    _add_input(p)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--mode", default="exact", choices=("exact", "expected"))
    p.add_argument("--uniform", action="store_true", help="use uniform scores (superfast path)")

    p = sub.add_parser("hss", help="HSS approximation")
    _add_common(p)
    _add_input(p)
    p.add_argument("--L", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--strategy", default="cur_ca", choices=("svd", "cur_ca"))

    p = sub.add_parser("selftest", help="run the acceptance checks")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--config", default=None)
    return ap


def _apply_config(args):
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = json.load(fh)
        for key, val in cfg.items():
            key = key.replace("-", "_")
            if not hasattr(args, key):
                raise SystemExit(f"unknown config key {key!r}")
            setattr(args, key, val)
    if args.seed is None:
        args.seed = _default_seed()
    return args


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_matrix(args, seed):
    if args.input:
        return read_matrix_market(args.input), os.path.basename(args.input)
    if not args.family:
        raise SystemExit("either --input or --family is required")
    params = {"n": args.n, "m": args.m or args.n, "r": args.r, "noise": args.noise}
    return testgen.generate(testgen.InputSpec(args.family, params, seed)), args.family


def _row(args, name, algo, m, n, results, **dims):
    errs = [r["err"] for r in results if r["err"] is not None]
    mean, std = summarize(errs)
    return BenchRow(input=name, algorithm=algo, m=m, n=n, mean=mean, std=std,
                    failures=sum(r["err"] is None for r in results), trials=len(results),
                    reads=int(np.mean([r["reads"] for r in results])) if results else 0,
                    seed=args.seed, runtime=float(np.mean([r["time"] for r in results])), **dims)


class _trial:
    """Picklable wrapper turning library failures into a failed trial."""

    def __init__(self, fn):
        self.fn = fn

    def __call__(self, seed):
        with Timer() as tm:
            try:
                err, reads = self.fn(seed)
            except SuperfastError:
                err, reads = None, 0
        return {"err": err, "reads": reads, "time": tm.elapsed}


class _LsrTrial:
    def __init__(self, args):
        self.a = vars(args).copy()

    def __call__(self, seed):
        a = self.a
        rng = np.random.default_rng(seed)
        if a["input"]:
            W = read_matrix_market(a["input"])
            prob = lsr.LsrProblem(W[:, :-1], W[:, -1])
        else:
            prob = testgen.gen_lsr_family(a["family"], a["m"], a["n"], rng)
        m = prob.A.shape[0]
        rep = lsr.sketch_solve_best(prob, lambda g: bench.lsr_multiplier(a["mult"], a["k"], m, g, a["d"]),
                                    a["best_of"], rng)
        return rep.ratio, prob.A.size + m


def cmd_lsr(args):
    results = run_trials(_trial(_LsrTrial(args)), args.trials, args.seed, args.workers)
    m = args.m
    name = os.path.basename(args.input) if args.input else args.family
    return [_row(args, name, f"lsr-{args.mult}", m, args.n, results, k=args.k)]


class _MatrixTrial:
    """One seeded trial of lra | cur | leverage | hss on a generated or loaded input.

    Typed rank failures are retried: lra draws a fresh H twice and then raises
    the target rank by one (up to l); the CUR commands draw fresh random sets.
    """

    retries = 3

    def __init__(self, args, kind):
        self.a = vars(args).copy()
        self.kind = kind

    def __call__(self, seed):
        a = self.a
        M, _ = _load_matrix(argparse.Namespace(**a), seed)
        rng = np.random.default_rng(seed)
        oracle = EntryOracle(M)
        norm = spectral_norm(M)
        if self.kind == "hss":
            H = hss.build_hss(oracle, a["L"], a["r"], a["tol"], a["strategy"], rng)
            return hss.hss_error(H, M) / norm, oracle.reads
        last = None
        for attempt in range(self.retries):
            try:
                if self.kind == "lra":
                    r = a["r"] + max(0, attempt - 1)
                    return self._lra(M, min(r, a["l"] or a["r"]), rng) / norm, M.size
                approx = self._cur(M, oracle, rng)
                return spectral_norm(M - approx) / norm, oracle.reads
            except (RangeFailure, PremultRankFailure, GeneratorRankFailure, SelectionFailure) as err:
                last = err
        raise last

    def _lra(self, M, r, rng):
        a = self.a
        m, n = M.shape
        H = bench.lra_multiplier(a["mult"], n, a["l"] or a["r"], rng, a["d"])
        if a["k"]:
            F = bench.lsr_multiplier("gaussian", a["k"], m, rng)
            f = lra.lra_premult(M, F, H, r, a["variant"])
        else:
            f = lra.range_finder(M, H, r, a["variant"])
        return spectral_norm(M - f.product())

    def _cur(self, M, oracle, rng):
        a = self.a
        m, n = M.shape
        r = a["r"]
        if self.kind == "leverage":
            k, l = a["k"] or 4 * r, a["l"] or 4 * r
            scores = leverage.uniform_scores(n) if a["uniform"] else None
            c = leverage.cur_via_leverage(oracle, r, k, l, mode=a["mode"], scores=scores, rng=rng)
            return c.reconstruct(oracle)
        k, l = a["k"] or r, a["l"] or r
        algo = a["algo"]
        if algo == "primitive":
            c = cur.primitive_cur(oracle, rng.choice(m, k, replace=False), rng.choice(n, l, replace=False), r)
        elif algo == "cynical":
            c = cur.cynical_cur(oracle, a["p"] or min(m, 4 * k), a["q"] or min(n, 4 * l), k, l, r, rng, a["h"])
        elif algo == "ca":
            c = cur.cross_approx(oracle, r, k, l, loops=a["loops"], h=a["h"], rng=rng)[0]
        else:
            # the top SVD comes from a dense factorization, so every entry is read
            c = cur.top_svd_to_cur(oracle, svd(oracle.dense()).truncate(r), k, l, a["h"])
        return c.reconstruct(oracle)


def cmd_matrix(args, kind):
    results = run_trials(_trial(_MatrixTrial(args, kind)), args.trials, args.seed, args.workers)
    M, name = _load_matrix(args, args.seed)
    m, n = M.shape
    algo = {"lra": lambda: f"lra-{args.mult}-{args.variant}" + (f"-premult{args.k}" if args.k else ""),
            "cur": lambda: f"cur-{args.algo}",
            "leverage": lambda: "leverage-" + ("uniform" if args.uniform else args.mode),
            "hss": lambda: f"hss-{args.strategy}-L{args.L}"}[kind]()
    dims = {"r": args.r}
    if kind in ("lra",):
        dims["l"] = args.l or args.r
        dims["k"] = args.k or 0
    if kind in ("cur", "leverage"):
        default = args.r if kind == "cur" else 4 * args.r
        dims["k"] = args.k or default
        dims["l"] = args.l or default
    return [_row(args, name, algo, m, n, results, **dims)]


def cmd_gen(args):
    params = {"n": args.n, "m": args.m or args.n, "r": args.r, "noise": args.noise, "i": args.i, "j": args.j}
    M = testgen.generate(testgen.InputSpec(args.family, params, args.seed))
    write_matrix_market(args.output, M, comment=f"family={args.family} seed={args.seed}")
    return 0


def cmd_selftest(args):
    results = acceptance.run_all(args.seed, args.quick)
    for c in results:
        print(c.line(), file=sys.stderr)
    _emit(rows_to_csv(acceptance.to_rows(results, args.seed)), args.output)
    return 0 if all(c.passed for c in results) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args = _apply_config(args)
    if args.command == "gen":
        return cmd_gen(args)
    if args.command == "selftest":
        return cmd_selftest(args)
    if args.trials < 1:
        raise SystemExit("trials must be >= 1")
    rows = cmd_lsr(args) if args.command == "lsr" else cmd_matrix(args, args.command)
    _emit(rows_to_csv(rows, args.timing), args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
