"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Reports the best wall time per case and the speedup of the compiled
backend.  Cases: a single tridiagonal solve, a shrink over an array, and
whole closed-loop simulations for both controllers.
"""
import argparse
import timeit

import numpy as np

from ftsheat._backend import available_backends, get_kernels
from ftsheat.feedback import ConstantDisturbance, NonlinearFeedback, SignFeedback
from ftsheat.grid import build_grid
from ftsheat.stepper import SimConfig, simulate


def cases(name):
    k = get_kernels(name)
    rng = np.random.default_rng(0)
    n = 1000
    factor = k.factor_diffusion(n, 1e-4 * (n + 1) ** 2)
    rhs, out = rng.standard_normal(n), np.empty(n)
    v = rng.standard_normal(n)
    sign = SimConfig(build_grid(200), 1.0, SignFeedback(2.0), ConstantDisturbance(0.5), dt=1e-4,
                     stop_when_settled=False)
    nonlin = SimConfig(build_grid(200), 1.0, NonlinearFeedback(0.8), profile={"kind": "quadratic_plus"},
                       dt=1e-4, stop_when_settled=False)
    return {
        "solve n=1000": (lambda: k.solve_diffusion(factor, rhs, out), 1000),
        "shrink n=1000": (lambda: k.shrink_array(v, 0.3, out), 1000),
        "sign loop 10^4 steps": (lambda: simulate(sign, name), 1),
        "nonlinear loop 10^4 steps": (lambda: simulate(nonlin, name), 1),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    names = sorted(available_backends())
    results = {}
    for name in names:
        for case, (fn, number) in cases(name).items():
            best = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
            results[case, name] = best
    print(f"{'case':28s}" + "".join(f"{n:>14s}" for n in names) + ("   speedup" if len(names) > 1 else ""))
    for case in cases(names[0]):
        row = f"{case:28s}" + "".join(f"{results[case, n] * 1e3:12.4f}ms" for n in names)
        if len(names) > 1:
            row += f"{results[case, 'python'] / results[case, 'cython']:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
