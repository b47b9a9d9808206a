"""Compare the compiled term kernel against the pure-Python fallback.

Raw mode times the four kernel functions on seeded random term tables and
prints one row per operation. With --end-to-end the script also runs a
fixed verification workload in two subprocesses (one per backend, since
the kernel is chosen at import time) and reports the wall-clock ratio.

Usage:
    python3 benchmarks/bench_termops.py
    python3 benchmarks/bench_termops.py --terms 500 --repeats 7 --end-to-end
"""

from __future__ import annotations

import argparse
import os
import random
import subprocess
import sys
import time
from fractions import Fraction

from algebroids import _termops_py

try:
    from algebroids import _termops
except ImportError:
    _termops = None


def random_terms(rng: random.Random, dim: int, count: int) -> dict:
    out = {}
    while len(out) < count:
        exps = tuple(rng.randrange(0, 4) for _ in range(dim))
        out[exps] = Fraction(rng.randrange(-9, 10) or 1, rng.randrange(1, 7))
    return out


def best_of(repeats: int, fn, *args) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_raw(args) -> None:
    rng = random.Random(args.seed)
    a = random_terms(rng, args.dim, args.terms)
    b = random_terms(rng, args.dim, args.terms)
    small = random_terms(rng, args.dim, max(4, args.terms // 16))
    cases = [
        ("add_terms", (a, b)),
        ("sub_terms", (a, b)),
        ("scale_terms", (a, Fraction(-7, 3))),
        ("mul_terms", (a, small)),
    ]
    print(f"dim={args.dim} terms={args.terms} repeats={args.repeats}")
    header = f"{'operation':<12} {'python':>10} {'compiled':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, call_args in cases:
        py = best_of(args.repeats, getattr(_termops_py, name), *call_args)
        if _termops is None:
            print(f"{name:<12} {py * 1e6:>8.1f}us {'n/a':>10} {'n/a':>8}")
            continue
        cy = best_of(args.repeats, getattr(_termops, name), *call_args)
        print(
            f"{name:<12} {py * 1e6:>8.1f}us {cy * 1e6:>8.1f}us {py / cy:>7.2f}x"
        )


WORKLOAD = """
import time
from algebroids import kernel
from algebroids.courant import check_courant, standard_exact
from algebroids.symcalc import KForm, Poly, coordinate_chart, parse_poly
from algebroids.transgression import check_tau_rules

chart = coordinate_chart("X", 3)
h = KForm(chart, 3, {(0, 1, 2): parse_poly("x1 + x2", chart)})
q = standard_exact(chart, h)
t0 = time.perf_counter()
assert check_courant(q).ok
assert check_tau_rules(q, samples=8, seed=1).ok
print(f"{kernel.BACKEND} {time.perf_counter() - t0:.3f}")
"""


def bench_end_to_end() -> None:
    print()
    print("end-to-end verification workload (one subprocess per backend):")
    for backend, force in (("compiled", "0"), ("python", "1")):
        if backend == "compiled" and _termops is None:
            print("  compiled kernel not built; skipping")
            continue
        env = dict(os.environ, ALGEBROIDS_PURE_KERNEL=force)
        proc = subprocess.run(
            [sys.executable, "-c", WORKLOAD],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        print(" ", proc.stdout.strip(), "s")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--terms", type=int, default=200)
    parser.add_argument("--dim", type=int, default=4)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--end-to-end", action="store_true")
    args = parser.parse_args()
    if _termops is None:
        print("note: compiled kernel unavailable, timing the fallback only")
    bench_raw(args)
    if args.end_to_end:
        bench_end_to_end()


if __name__ == "__main__":
    main()
