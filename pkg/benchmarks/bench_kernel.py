"""Compare the compiled and numpy Huygens-Fresnel kernels.

Usage: python3 benchmarks/bench_kernel.py [--aperture N] [--lens M] [--repeat R]

Reports nanoseconds per (aperture sample, lens point) pair for each backend
and the largest difference between the two results.
"""
import argparse
import math
import time

import numpy as np

from fsoirs import _hfkernel_py

try:
    from fsoirs import _hfkernel
except ImportError:  # extension not built
    _hfkernel = None


def problem(n_ap, n_lens, seed=1):
    rng = np.random.default_rng(seed)
    yp = np.linspace(-0.1, 0.1, n_ap)
    wre = rng.normal(size=n_ap)
    wim = rng.normal(size=n_ap)
    ry = np.linspace(-0.025, 0.025, n_lens)
    rz = np.full(n_lens, 200.0)
    return yp, wre, wim, ry, rz, 2 * math.pi / 1550e-9


def timeit(fn, args, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--aperture", type=int, default=258_065)
    ap.add_argument("--lens", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    args = problem(a.aperture, a.lens)
    pairs = a.aperture * a.lens
    t_np, r_np = timeit(_hfkernel_py.hf_line_sum, args, a.repeat)
    print(f"numpy     {t_np / pairs * 1e9:8.2f} ns/pair  ({t_np:.3f} s)")
    if _hfkernel is None:
        print("compiled  not built")
        return
    t_c, r_c = timeit(_hfkernel.hf_line_sum, args, a.repeat)
    diff = max(np.max(np.abs(r_np[0] - r_c[0])), np.max(np.abs(r_np[1] - r_c[1])))
    scale = max(np.max(np.abs(r_np[0])), np.max(np.abs(r_np[1])))
    print(f"compiled  {t_c / pairs * 1e9:8.2f} ns/pair  ({t_c:.3f} s)")
    print(f"speedup   {t_np / t_c:8.2f}x")
    print(f"max |diff| {diff:.3e} (relative to max |sum| {diff / scale:.3e})")


if __name__ == "__main__":
    main()
