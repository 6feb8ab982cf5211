"""Compiled vs pure-Python classical kernels.

    python bench/benchmark.py [--steps N] [--repeat R]
"""
import argparse
import time

import numpy as np

from wignerchaos import _pycore
from wignerchaos.classical import _args
from wignerchaos.potentials import double_well

try:
    from wignerchaos import _ccore
except ImportError:  # extension not built
    _ccore = None


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args(argv)
    d, dd, A, w, m = _args(double_well())
    stride = 10
    blocks = a.steps // stride
    cases = {
        "verlet": lambda mod: mod.verlet_trajectory(0.1, 0.2, 0.0, 0.01, a.steps, d, A, w, m),
        "benettin": lambda mod: mod.benettin(0.1, 0.2, 0.0, 0.01, blocks, stride, d, dd, A, w, m),
    }
    print(f"{'kernel':<10}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}{'max |diff|':>14}")
    for name, call in cases.items():
        tp, op = _time(lambda: call(_pycore), a.repeat)
        if _ccore is None:
            print(f"{name:<10}{tp:>12.4f}{'n/a':>12}{'n/a':>10}{'n/a':>14}")
            continue
        tc, oc = _time(lambda: call(_ccore), a.repeat)
        diff = max(float(np.max(np.abs(np.asarray(u, dtype=float) - np.asarray(v, dtype=float))))
                   for u, v in zip(op, oc))
        print(f"{name:<10}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}{diff:>14.2e}")


if __name__ == "__main__":
    main()
