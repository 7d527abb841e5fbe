"""Compare the compiled and numpy quadrature kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times ``axisym_moments`` with each backend on grids of the sizes reached by
``fom_generic`` and prints the largest difference between backends.
"""
import argparse
import math
import timeit

import numpy as np

from dipolatt._kernels import _pykernels

try:
    from dipolatt._kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _grid(nr, nt):
    r = np.linspace(1e-3, 0.6, nr)
    x, w = np.polynomial.legendre.leggauss(nt)
    theta = 0.5 * math.pi * (x + 1)
    return r, theta, 0.5 * math.pi * w


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    else:
        print("compiled kernels not available; timing the numpy fallback only")
    print(f"{'grid':>12} " + " ".join(f"{name:>12}" for name in backends) + "   max|diff|")
    for nr, nt in ((96, 48), (384, 96), (1536, 192)):
        r, th, wt = _grid(nr, nt)
        args_k = (r, th, wt, 0.07, 0.14, 0.18)
        times, outs = [], []
        for mod in backends.values():
            t = min(timeit.repeat(lambda: mod.axisym_moments(*args_k), number=3, repeat=args.repeat)) / 3
            times.append(t)
            outs.append(np.concatenate(mod.axisym_moments(*args_k)))
        diff = max(float(np.max(np.abs(o - outs[0]))) for o in outs)
        print(f"{nr:>5}x{nt:<6} " + " ".join(f"{t * 1e3:>10.3f}ms" for t in times) + f"   {diff:.2e}")


if __name__ == "__main__":
    main()
