"""Compiled vs pure-NumPy Kalman kernels on the state-space study model.

Run with ``python3 benchmarks/bench_kernels.py [--n 100] [--repeat 5]``.
Also checks that the two backends agree before timing them.
"""
import argparse
import timeit

import numpy as np

from fimlab import kernels
from fimlab.models import LinearStateSpaceModel
from fimlab.numerics import stream_for


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=100)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if kernels.BACKEND == "python":
        raise SystemExit("compiled kernels not built; run `pip install -e . --no-build-isolation` first")
    model = LinearStateSpaceModel.default_study()
    theta = np.ones(model.p)
    y = model.sample(theta, args.n, stream_for(0, "bench"))
    call = (model.A, model.C, model.R, theta, model.mu0, model.Sigma0, y)
    fast, slow = kernels, kernels.python_backend

    v_fast, g_fast, h_fast = fast.ss_nll_derivs(*call)
    v_slow, g_slow, h_slow = slow.ss_nll_derivs(*call)
    err = max(abs(v_fast - v_slow), np.max(np.abs(g_fast - g_slow)), np.max(np.abs(h_fast - h_slow)))
    print(f"n={args.n}  max |compiled - python| over value/grad/hess: {err:.2e}")

    print(f"{'kernel':<16}{'compiled':>14}{'python':>14}{'speedup':>10}")
    for name in ("ss_nll", "ss_nll_derivs"):
        times = []
        for impl in (fast, slow):
            fn = getattr(impl, name)
            timer = timeit.Timer(lambda: fn(*call))
            number, _ = timer.autorange()
            times.append(min(timer.repeat(args.repeat, number)) / number)
        print(f"{name:<16}{times[0] * 1e6:>11.1f} us{times[1] * 1e6:>11.1f} us{times[1] / times[0]:>9.0f}x")


if __name__ == "__main__":
    main()
