"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--sizes 256 1024 4096] [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from fracplankton import _kernels_py
from fracplankton.model import ModelParams
from fracplankton.solver import mild_convolution_weights

try:
    from fracplankton import _kernels as compiled
except ImportError:
    compiled = None


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 4096])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--alpha", type=float, default=0.8)
    args = ap.parse_args()

    backends = {"python": _kernels_py}
    if compiled is not None:
        backends["cython"] = compiled
    else:
        print("compiled kernels unavailable; timing the fallback only")

    params = ModelParams.all_ones().as_array()
    y0 = np.ones(3)
    print(f"{'kernel':<18} {'N':>6} " + " ".join(f"{b + ' [s]':>12}" for b in backends) + f" {'speedup':>9}")
    for n in args.sizes:
        step = 1.0 / n
        W, J = mild_convolution_weights(args.alpha, -1.0, step, n)
        g = np.cos(np.linspace(0.0, 1.0, n + 1))
        cases = {
            "abm_solve": lambda km: km.abm_solve(args.alpha, step, n, y0, params),
            "history_convolve": lambda km: km.history_convolve(W, J, g),
        }
        for name, call in cases.items():
            times = {b: best_of(lambda km=km: call(km), args.repeat) for b, km in backends.items()}
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            print(f"{name:<18} {n:>6} " + " ".join(f"{t:>12.4g}" for t in times.values()) + f" {speed:>8.1f}x")


if __name__ == "__main__":
    main()
