"""Timing of the numba kernels against the pure-numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--n 100000] [--repeat 5]``.
Prints best-of-``repeat`` wall times per kernel and the speedup, plus the
largest absolute difference between the two backends' outputs.
"""
import argparse
import time

import numpy as np

from feller._kernels import numba_backend, numpy_backend

K0, K1 = np.uint64(12345), np.uint64(0x46454C4C45525F31)


def _cases(n):
    streams = np.arange(n, dtype=np.uint64)
    tags = np.ones(n, dtype=np.uint64)
    alpha = np.linspace(0.9, 1.9, n)
    u = numpy_backend.uniforms(K0, K1, 0, 0, streams, tags, 2)
    mu = np.full(n, 3.0)
    return {
        "uniforms(k=8)": lambda b: b.uniforms(K0, K1, 0, 0, streams, tags, 8),
        "box_muller": lambda b: b.box_muller(u),
        "cms_symmetric": lambda b: b.cms_symmetric(u[:, 0], u[:, 1], alpha),
        "poisson_inverse(mu=3)": lambda b: b.poisson_inverse(u[:, 0], mu),
        "stable_like_increments": lambda b: b.stable_like_increments(
            alpha, 1.0, 0.005, K0, K1, 0, 7, streams, tags, 1),
    }


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if numba_backend is None:
        raise SystemExit("numba backend unavailable (FELLER_DISABLE_NUMBA set?)")
    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':<26}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}{'max diff':>11}")
    for name, run in _cases(args.n).items():
        run(numba_backend)  # compile outside the timed region
        t_np = _best(lambda: run(numpy_backend), args.repeat)
        t_nb = _best(lambda: run(numba_backend), args.repeat)
        a, b = np.asarray(run(numpy_backend)), np.asarray(run(numba_backend))
        diff = float(np.max(np.abs(a.astype(np.float64) - b.astype(np.float64))))
        print(f"{name:<26}{t_np * 1e3:>10.2f}{t_nb * 1e3:>10.2f}{t_np / t_nb:>9.1f}{diff:>11.2e}")


if __name__ == "__main__":
    main()
