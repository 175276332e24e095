"""Compiled vs pure-numpy kernels, plus an end-to-end solver timing.

    python benchmarks/bench_kernels.py [--n 400] [--repeat 5]

Kernel rows time numba's compiled function against its ``py_func``; helpers
called from inside a ``py_func`` stay compiled, so kernels built on other
kernels (top_eigenvalue, inverse_iteration) understate the gap.  The solver
row runs the same sweep in a subprocess with ABST_NUMBA=0, fully uncompiled.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from abstention import _jit, kernels
from abstention.model import build_cost_matrix

SWEEP = """
import time
from abstention.model import AbstentionBudget, build_cost_matrix, make_fiducial
from abstention.solver import solve_abstention
m = build_cost_matrix("frame_rydberg", {n})
c = make_fiducial("linear_ramp", {n})
solve_abstention(m, c, AbstentionBudget(0.5))
t = time.perf_counter()
for k in range(1, 10):
    solve_abstention(m, c, AbstentionBudget(k / 10))
print(time.perf_counter() - t)
"""


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def sweep_seconds(n, numba_on):
    env = dict(os.environ, ABST_NUMBA="1" if numba_on else "0")
    out = subprocess.run([sys.executable, "-c", SWEEP.format(n=n)], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _jit.USE_NUMBA:
        sys.exit("numba is disabled in this interpreter; unset ABST_NUMBA")
    m = build_cost_matrix("frame_rydberg", args.n)
    d = np.ascontiguousarray(m.diag + m.shift)
    e = np.ascontiguousarray(m.couplings)
    x = np.random.default_rng(0).random(args.n + 1)
    theta = kernels.top_eigenvalue(d, e)
    u = np.full(args.n + 1, 2.0 / np.sqrt(args.n + 1))
    cases = {
        "tridiag_matvec": (kernels.tridiag_matvec, (d, e, x)),
        "top_eigenvalue": (kernels.top_eigenvalue, (d, e)),
        "inverse_iteration": (kernels.inverse_iteration, (d, e, theta)),
        "project_box_sphere": (kernels.project_box_sphere, (x, u, np.empty_like(x))),
    }
    print(f"{'kernel':<20}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}   (n = {args.n})")
    for name, (fn, a) in cases.items():
        fn(*a)  # compile
        fast = best(lambda: fn(*a), args.repeat)
        slow = best(lambda: fn.py_func(*a), args.repeat)
        print(f"{name:<20}{fast:>12.2e}{slow:>12.2e}{slow / fast:>10.1f}")
    fast = sweep_seconds(args.n, True)
    slow = sweep_seconds(args.n, False)
    print(f"{'solver sweep (9 q)':<20}{fast:>12.2e}{slow:>12.2e}{slow / fast:>10.1f}")


if __name__ == "__main__":
    main()
