"""Compare the compiled kernels against the pure-Python fallback.

Usage: python bench/bench_kernels.py [--hours H] [--repeat N]
"""

import argparse
import time

import numpy as np

from thermalink import _fallback

try:
    from thermalink import _kernels
except ImportError:  # extension not built
    _kernels = None


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--hours", type=float, default=6.0, help="simulated time per call")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--dt", type=float, default=0.1)
    args = ap.parse_args()

    n = int(args.hours * 3600 / args.dt)
    rng = np.random.default_rng(0)
    alpha = np.repeat(rng.integers(0, 2, n // 4500 + 1).astype(np.float64), 4500)[:n]
    node_args = (alpha, args.dt, 32.0, 10.0, 29.5, 5082.0, 588.0, 20.0, 5.0, 32.0, 32.0)
    exc = np.clip(alpha, 0, 1)
    couple_args = (exc, args.dt, 200, 4.3, 588.0, 80.0, 4.0, 0.0)

    print(f"{n} steps ({args.hours:g} h at dt={args.dt:g} s), best of {args.repeat}")
    print(f"{'kernel':<16}{'python s':>12}{'cython s':>12}{'speedup':>10}  identical")
    for name, a in (("integrate_node", node_args), ("couple", couple_args)):
        t_py, out_py = best_of(getattr(_fallback, name), a, args.repeat)
        if _kernels is None:
            print(f"{name:<16}{t_py:>12.4f}{'n/a':>12}{'n/a':>10}  extension not built")
            continue
        t_cy, out_cy = best_of(getattr(_kernels, name), a, args.repeat)
        if isinstance(out_py, tuple):
            same = all(np.array_equal(x, y) for x, y in zip(out_py, out_cy))
        else:
            same = np.array_equal(out_py, out_cy)
        print(f"{name:<16}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>9.0f}x  {same}")


if __name__ == "__main__":
    main()
