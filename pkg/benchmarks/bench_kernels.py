"""Timing comparison of the compiled kernels against the numpy fallback.

Run as: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from nastya._kernels import _py

try:
    from nastya._kernels import _fast
except ImportError:
    _fast = None


def _time(fn, *args, repeats=200):
    fn(*args)  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats


def quad_case(rng, M, n, d, C):
    base = rng.normal(size=(M, n, d, d))
    H = np.ascontiguousarray(base @ base.transpose(0, 1, 3, 2) + np.eye(d))
    c = np.ascontiguousarray(rng.normal(size=(M, n, d)))
    clients = np.ascontiguousarray(np.arange(C, dtype=np.int64))
    idx = np.array([rng.permutation(n) for _ in range(C)], dtype=np.int64)
    x = rng.normal(size=d)
    return H, c, clients, idx, x


def logreg_case(rng, M, n, d, C):
    A = np.ascontiguousarray(rng.normal(size=(M, n, d)))
    y = np.ascontiguousarray(np.where(rng.uniform(size=(M, n)) < 0.5, -1.0, 1.0))
    clients = np.ascontiguousarray(np.arange(C, dtype=np.int64))
    idx = np.array([rng.permutation(n) for _ in range(C)], dtype=np.int64)
    x = rng.normal(size=d)
    return A, y, clients, idx, x


def row(label, t_py, t_fast):
    if t_fast is None:
        print(f"{label:<38} {t_py * 1e6:>10.1f} us {'-':>12}")
    else:
        print(f"{label:<38} {t_py * 1e6:>10.1f} us {t_fast * 1e6:>9.1f} us "
              f"({t_py / t_fast:>5.1f}x)")


def main():
    rng = np.random.default_rng(0)
    print(f"{'kernel (M, n, d, C)':<38} {'numpy':>13} {'compiled':>12}")
    for M, n, d, C in ((10, 8, 5, 5), (32, 16, 10, 8), (100, 32, 20, 10)):
        H, c, clients, idx, x = quad_case(rng, M, n, d, C)
        t_py = _time(_py.quad_pass, H, c, clients, idx, x, 1e-3)
        t_fast = None if _fast is None else _time(_fast.quad_pass, H, c, clients, idx, x, 1e-3)
        row(f"quad_pass ({M}, {n}, {d}, {C})", t_py, t_fast)
        t_py = _time(_py.quad_value_grad, H, c, x)
        t_fast = None if _fast is None else _time(_fast.quad_value_grad, H, c, x)
        row(f"quad_value_grad ({M}, {n}, {d})", t_py, t_fast)
        A, y, clients, idx, x = logreg_case(rng, M, n, d, C)
        t_py = _time(_py.logreg_pass, A, y, 0.1, clients, idx, x, 1e-3)
        t_fast = None if _fast is None else _time(_fast.logreg_pass, A, y, 0.1, clients, idx, x, 1e-3)
        row(f"logreg_pass ({M}, {n}, {d}, {C})", t_py, t_fast)

    # whole-run comparison on the acceptance-scale quadratic
    import os
    from nastya.engine import RunConfig, run_nastya
    from nastya.problems import make_quadratic_problem

    problem = make_quadratic_problem(10, 8, 5, mu=0.01, L=1.0, heterogeneity=1.0, seed=2024)
    cfg = RunConfig(cstep=1 / (16 * 10 * 8), sstep=1 / 16, cohort_size=5,
                    horizon=300, x0=np.zeros(5), seed=0)
    start = time.perf_counter()
    run_nastya(problem, cfg)
    elapsed = time.perf_counter() - start
    from nastya._kernels import BACKEND

    print(f"\nrun_nastya 300 rounds, backend in use [{BACKEND}]: {elapsed * 1e3:.1f} ms")
    if os.environ.get("NASTYA_KERNELS") != "python":
        print("re-run with NASTYA_KERNELS=python for the fallback timing")


if __name__ == "__main__":
    main()
