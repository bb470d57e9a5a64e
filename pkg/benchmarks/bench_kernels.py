"""Compare the compiled and NumPy kernel backends.

Times off-grid trigonometric evaluation and diffeomorphism inversion at
several grid sizes and prints one row per (kernel, n) with the speedup.

    python benchmarks/bench_kernels.py [--sizes 64,128,256,512,1024] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from loopreg import kernels
from loopreg.diffeo import invert
from loopreg.loop import symmetric_coefficients
from loopreg.verify import random_diffeo, random_loop


def best_time(fn, repeat):
    number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-9)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def cases(n, rng):
    z = random_loop(rng, n)
    sym = symmetric_coefficients(z.coefficients, 0)
    t = rng.random(4 * n)
    psi = random_diffeo(rng, n)
    return {
        "trig_eval": lambda: kernels.trig_eval(sym, t),
        "invert": lambda: invert(psi),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="64,128,256,512,1024")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    names = kernels.available_backends()
    previous = kernels.backend()
    print(f"backends: {', '.join(names)}")
    header = f"{'kernel':10s} {'n':>6s}" + "".join(f" {name + ' [ms]':>13s}" for name in names)
    if len(names) == 2:
        header += f" {'speedup':>8s}"
    print(header)
    try:
        for n in [int(v) for v in args.sizes.split(",")]:
            rng = np.random.default_rng(args.seed)
            for kernel, fn in cases(n, rng).items():
                times = []
                for name in names:
                    kernels.use_backend(name)
                    times.append(best_time(fn, args.repeat))
                row = f"{kernel:10s} {n:6d}" + "".join(f" {1e3 * s:13.3f}" for s in times)
                if len(times) == 2:
                    row += f" {times[1] / times[0]:7.1f}x"
                print(row)
    finally:
        kernels.use_backend(previous)


if __name__ == "__main__":
    main()
