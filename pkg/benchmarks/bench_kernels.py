"""Time the numba and numpy variants of the hot kernels.

    python3 benchmarks/bench_kernels.py [--n 3500] [--repeat 20]

Both variants run in the same process; the numba ones are warmed up first
so compilation is not counted.
"""

import argparse
import time

import numpy as np

from bootimpute import kernels
from bootimpute._accel import numba
from bootimpute.datagen import DgpConfig, generate_dataset
from bootimpute.numerics import RngStream


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=3500)
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args(argv)

    data = generate_dataset(DgpConfig(n=args.n), RngStream(1, 0))
    order = np.argsort(data.s, kind="stable")
    x = np.ascontiguousarray(data.x[order] - data.x.mean(axis=0))
    s = np.ascontiguousarray(data.s[order])
    d = np.ascontiguousarray(data.delta[order])
    beta = np.asarray(DgpConfig().log_hr)
    risk = np.random.default_rng(0).random(args.n)
    cases, controls = risk[: args.n // 10], risk[args.n // 10:]

    pairs = [
        ("cox_efron", lambda: kernels.cox_efron_loop(x, s, d, beta), lambda: kernels.cox_efron_numpy(x, s, d, beta)),
        ("auc_counts", lambda: kernels.auc_counts_loop(cases, controls),
         lambda: kernels.auc_counts_numpy(cases, controls)),
    ]
    print(f"n={args.n}, best of {args.repeat}, numba {'available' if numba else 'missing (loop runs as Python)'}")
    print(f"{'kernel':12}{'loop ms':>12}{'numpy ms':>12}{'ratio':>10}")
    for name, loop, vec in pairs:
        loop()  # compile
        a = best_of(loop, args.repeat) * 1e3
        b = best_of(vec, args.repeat) * 1e3
        print(f"{name:12}{a:12.3f}{b:12.3f}{b / a:10.1f}")


if __name__ == "__main__":
    main()
