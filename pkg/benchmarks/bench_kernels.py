"""Compare the compiled and numpy kernel backends.

Usage:
    python3 benchmarks/bench_kernels.py [--points 20000] [--modes 32] [--repeat 3]

Each kernel is timed with both backends on the same inputs; the table
reports the best wall time and the speedup.  It also reports the largest
absolute difference between the two results, and the largest relative one
(which is only large next to zeros of the Bessel functions).
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from hardylab import kernels
from hardylab.extension import ExtendedField
from hardylab.numerics.special import gamma_fn, k_constants
from hardylab.params import ProblemParams
from hardylab.spectrum import SpectralField, radial_catalog


def best_time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def rel_diff(a, b):
    a = np.concatenate([np.ravel(x) for x in a])
    b = np.concatenate([np.ravel(x) for x in b])
    scale = np.maximum(np.abs(a), np.abs(b))
    mask = scale > 0
    return float(np.max(np.abs(a - b)[mask] / scale[mask])) if mask.any() else 0.0


def abs_diff(a, b):
    return max(float(np.max(np.abs(np.ravel(x) - np.ravel(y)))) for x, y in zip(a, b))


def cases(n_points, n_modes, seed=0):
    rng = np.random.default_rng(seed)
    params = ProblemParams(N=3, s=0.3, alpha=0.0, modes=n_modes)
    cat = radial_catalog(params)
    field = ExtendedField(SpectralField(cat, rng.standard_normal(n_modes) / (1.0 + np.arange(n_modes))))
    nu = field.nu
    x = rng.uniform(1e-3, 60.0, n_points)
    z = rng.uniform(1e-3, 30.0, n_points)
    t = rng.uniform(1e-3, 1.0, n_points)
    y = rng.uniform(0.0, 1.0, n_points)
    kc = np.array(k_constants(params.s))
    inv_g = 1.0 / gamma_fn(nu + 1.0)
    return {
        "jpair": lambda b: b.jpair(nu, x, inv_g),
        "kpair": lambda b: b.kpair(params.s, z, kc),
        "radial_field": lambda b: b.radial_field(
            t, y, nu, field.p, field.s, field.zeros, field.weights, inv_g, field._pref,
            field._kc, True, kernels.thread_count()),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--modes", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    py = kernels.get_backend("python")
    try:
        cy = kernels.get_backend("cython")
    except ImportError:
        print("compiled backend not built; only the numpy fallback is available")
        cy = None
    print(f"points={args.points} modes={args.modes} threads={kernels.thread_count()}")
    print(f"{'kernel':<14}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}{'max abs diff':>15}{'max rel diff':>15}")
    for name, fn in cases(args.points, args.modes).items():
        tp, rp = best_time(lambda: fn(py), args.repeat)
        if cy is None:
            print(f"{name:<14}{tp:>12.4f}{'-':>12}{'-':>10}{'-':>15}{'-':>15}")
            continue
        tc, rc = best_time(lambda: fn(cy), args.repeat)
        print(f"{name:<14}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}{abs_diff(rp, rc):>15.2e}"
              f"{rel_diff(rp, rc):>15.2e}")


if __name__ == "__main__":
    main()
