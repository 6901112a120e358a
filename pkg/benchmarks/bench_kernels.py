"""Compare the compiled and pure-Python Euler stepping kernels.

Usage: python benchmarks/bench_kernels.py [--steps N] [--width M] [--repeat K]
"""
import argparse
import time

import numpy as np

from ndde import kernels


def _setup(steps, width, R, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, width)
    c = rng.uniform(-0.5, 0.5, width)
    b = rng.uniform(-0.1, 0.1, width)
    states = np.zeros((R + steps + 1, width))
    states[: R + 1] = rng.uniform(-1, 1, width)
    return states, a, c, b


def _time(fn, states, R, steps, delta, a, c, b, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        s = states.copy()
        t0 = time.perf_counter()
        fn(s, R, steps, delta, a, c, b, True)
        best = min(best, time.perf_counter() - t0)
        out = s
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--width", type=int, default=4)
    ap.add_argument("--R", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    states, a, c, b = _setup(args.steps, args.width, args.R)
    delta = 1.0 / args.steps
    py_t, py_out = _time(kernels.python_euler_elementwise, states, args.R, args.steps, delta,
                         a, c, b, args.repeat)
    print(f"python    {py_t * 1e3:10.2f} ms")
    if kernels.compiled_euler_elementwise is None:
        print("compiled  not built")
        return
    c_t, c_out = _time(kernels.compiled_euler_elementwise, states, args.R, args.steps, delta,
                       a, c, b, args.repeat)
    print(f"compiled  {c_t * 1e3:10.2f} ms")
    print(f"speedup   {py_t / c_t:10.1f}x")
    print(f"identical {np.array_equal(py_out, c_out)}")


if __name__ == "__main__":
    main()
