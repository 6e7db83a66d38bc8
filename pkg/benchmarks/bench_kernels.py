"""Compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--N 2000] [--repeat 5]

Prints best-of-``repeat`` wall time for each kernel and backend, and checks
that both backends agree on the same inputs.
"""
import argparse
import timeit

import numpy as np

from geosbm import _fallback

try:
    from geosbm import _kernels
except ImportError:  # extension not built
    _kernels = None


def inputs(N, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((N, 2))
    Q = np.clip(_fallback.gaussian_kernel(X, 50.0) * 0.5 + 0.01, 0, 1)
    np.fill_diagonal(Q, 0.0)
    u = rng.random(N * (N - 1) // 2)
    mu = np.sort(rng.standard_normal(N))[::-1].copy()
    r = rng.standard_normal(N)
    s = rng.standard_normal(N)
    return X, Q, u, (mu, r, s, float(mu[0]) + 1.0)


def bench(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--N", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args(argv)
    X, Q, u, sec = inputs(a.N)
    cases = [("gaussian_kernel", (X, 50.0)), ("bernoulli_fill", (Q, u)), ("secular_sums", sec)]
    print(f"N={a.N}  repeat={a.repeat}")
    print(f"{'kernel':<18}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, args in cases:
        tp = bench(getattr(_fallback, name), args, a.repeat)
        if _kernels is None:
            print(f"{name:<18}{tp:>12.5f}{'n/a':>12}{'':>10}")
            continue
        tc = bench(getattr(_kernels, name), args, a.repeat)
        ref = np.asarray(getattr(_fallback, name)(*args), dtype=float)
        got = np.asarray(getattr(_kernels, name)(*args), dtype=float)
        if not np.allclose(ref, got, rtol=1e-12, atol=1e-12):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<18}{tp:>12.5f}{tc:>12.5f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
