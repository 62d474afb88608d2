#!/usr/bin/env python3
"""Benchmark the mode-evolution kernel: numba @njit vs the pure-numpy fallback.

The two paths implement the identical Crank-Nicolson recursion; this script
times both on the same inputs and reports the max amplitude deviation.

    python benchmarks/bench_ww.py [--sizes 1000 4000 16000] [--steps 2500]

To run the whole package on the fallback path instead, set
CAUSALATOM_NO_NUMBA=1 in the environment.
"""

import argparse
import time

import numpy as np

from causalatom._ww_kernels import HAVE_NUMBA, _evolve_numpy, evolve_amplitudes

if HAVE_NUMBA:
    from causalatom._ww_kernels import _evolve_numba


def make_problem(n_modes, bandwidth=100.0):
    detun = np.linspace(-bandwidth / 2, bandwidth / 2, n_modes)
    rho = n_modes / bandwidth
    g = np.full(n_modes, np.sqrt(1.0 / (2.0 * np.pi * rho)))
    return detun, g


def time_kernel(kernel, detun, g, dt, n_steps, stride, repeats=3):
    n_samples = n_steps // stride
    best = np.inf
    out = None
    for _ in range(repeats):
        ce = np.zeros(n_samples, dtype=np.complex128)
        ck = np.zeros((n_samples, detun.size), dtype=np.complex128)
        no = np.zeros(n_samples)
        ts = np.zeros(n_samples)
        t0 = time.perf_counter()
        kernel(detun, g, dt, n_steps, stride, ce, ck, no, ts)
        best = min(best, time.perf_counter() - t0)
        out = ce
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[1000, 4000, 16000])
    parser.add_argument("--steps", type=int, default=2500)
    args = parser.parse_args()

    dt = 0.19 / 50.0
    stride = max(1, args.steps // 200)

    print(f"numba available: {HAVE_NUMBA}")
    if HAVE_NUMBA:
        # trigger compilation outside the timed region
        d0, g0 = make_problem(64)
        evolve_amplitudes(d0, g0, dt, 10, 5)

    header = f"{'n_modes':>8} {'steps':>6} {'numpy [s]':>10}"
    if HAVE_NUMBA:
        header += f" {'numba [s]':>10} {'speedup':>8} {'max |dc_e|':>11}"
    print(header)
    for n in args.sizes:
        detun, g = make_problem(n)
        t_np, ce_np = time_kernel(_evolve_numpy, detun, g, dt, args.steps, stride)
        line = f"{n:>8} {args.steps:>6} {t_np:>10.3f}"
        if HAVE_NUMBA:
            t_nb, ce_nb = time_kernel(_evolve_numba, detun, g, dt, args.steps, stride)
            dev = np.abs(ce_np - ce_nb).max()
            line += f" {t_nb:>10.3f} {t_np / t_nb:>8.2f} {dev:>11.2e}"
        print(line)


if __name__ == "__main__":
    main()
