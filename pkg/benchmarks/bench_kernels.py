"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--samples N] [--repeat R]
"""
import argparse
import time

import numpy as np

from weakprotect import _kernels
from weakprotect.channel import CanonicalParams
from weakprotect.protocol import WeakParams, compose
from weakprotect.qmath import haar_angles, sample_stream


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    stack = compose(CanonicalParams(0.6, 0.48, 0.64, 1.0, 0.5), WeakParams(0.9, 0.95)).inner.stack
    cos_alpha, beta = haar_angles(sample_stream(1), args.samples)
    u = sample_stream(1, 1).random(args.samples)

    cases = {
        "fidelity_terms": (
            lambda: _kernels.fidelity_terms_numpy(cos_alpha, beta, stack),
            lambda: _kernels.fidelity_terms_numba(cos_alpha, beta, stack),
        ),
        "trajectory_terms": (
            lambda: _kernels.trajectory_terms_numpy(cos_alpha, beta, u, stack),
            lambda: _kernels.trajectory_terms_numba(cos_alpha, beta, u, stack),
        ),
    }
    print(f"samples={args.samples} repeat={args.repeat} numba={'yes' if _kernels.HAVE_NUMBA else 'no'}")
    print(f"{'kernel':<18}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, (np_fn, nb_fn) in cases.items():
        t_np = best_of(np_fn, args.repeat)
        if not _kernels.HAVE_NUMBA:
            print(f"{name:<18}{t_np:>12.4f}{'-':>12}{'-':>10}")
            continue
        nb_fn()  # compile
        t_nb = best_of(nb_fn, args.repeat)
        a, b = np_fn(), nb_fn()
        dev = max(float(np.max(np.abs(x - y))) for x, y in zip(a, b))
        print(f"{name:<18}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x   max|diff|={dev:.1e}")


if __name__ == "__main__":
    main()
