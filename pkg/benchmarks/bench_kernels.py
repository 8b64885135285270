"""Compare the compiled and pure-Python per-sample kernels.

Run with ``python benchmarks/bench_kernels.py``.  Reports the kernel time
on typical problem shapes and the end-to-end robust solve time under each
backend (the latter in a subprocess with the backend forced by environment).
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from wkelly import _kernels_py

try:
    from wkelly import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

SOLVE_SNIPPET = """
import time, numpy as np
from wkelly import BallSpec, ReturnsMatrix, solve_wkelly, BACKEND
rng = np.random.default_rng(0)
R = ReturnsMatrix.log(0.01 * rng.standard_t(4, ({N}, {n})))
eps = 0.2 * float(np.abs(R.values).mean())
solve_wkelly(R, BallSpec(2, eps, "l2"))
t = time.perf_counter()
for _ in range({reps}):
    solve_wkelly(R, BallSpec(2, eps, "l2"))
print(BACKEND, (time.perf_counter() - t) / {reps})
"""


def _kernel_time(mod, A, beta, number):
    return min(timeit.repeat(lambda: mod.solve_quad_entropy(A, beta), number=number, repeat=5)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true", help="fewer shapes and repetitions")
    args = ap.parse_args(argv)
    shapes = [(60, 10), (252, 10)] if args.quick else [(5, 3), (60, 10), (252, 10), (252, 50), (1000, 100)]
    rng = np.random.default_rng(1)
    print(f"{'N x n':>12} {'python [us]':>12} {'cython [us]':>12} {'speedup':>8} {'max |dV|':>10}")
    for N, n in shapes:
        A = 0.01 * rng.standard_normal((N, n)) + np.log(rng.dirichlet(np.ones(n)))
        beta = 5.0
        number = 20 if args.quick else 50
        tp = _kernel_time(_kernels_py, A, beta, number)
        if _kernels_c is not None:
            tc = _kernel_time(_kernels_c, A, beta, number)
            diff = np.abs(_kernels_c.solve_quad_entropy(A, beta)[0]
                          - _kernels_py.solve_quad_entropy(A, beta)[0]).max()
            print(f"{N:>5} x {n:<4} {tp * 1e6:12.1f} {tc * 1e6:12.1f} {tp / tc:8.2f} {diff:10.2e}")
        else:
            print(f"{N:>5} x {n:<4} {tp * 1e6:12.1f} {'n/a':>12}")

    print("\nend-to-end robust solve (N=60, n=10, p=2, l2):")
    for forced in ("", "1"):
        env = dict(os.environ)
        env.pop("WKELLY_PURE_PYTHON", None)
        if forced:
            env["WKELLY_PURE_PYTHON"] = forced
        code = SOLVE_SNIPPET.format(N=60, n=10, reps=3 if args.quick else 10)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                             text=True, check=True).stdout.split()
        print(f"  backend={out[0]:<7} {float(out[1]) * 1e3:8.1f} ms per solve")


if __name__ == "__main__":
    main()
