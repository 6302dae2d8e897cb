"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 20]

The end-to-end row runs a short sweep in a subprocess per backend so the
BLINDNULL_NUMBA flag is honoured at import time.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from blindnull import kernels
from blindnull.cmatrix import column_space_projector

SWEEP_SNIPPET = """
import time, tempfile, os
from blindnull.harness.config import ExperimentConfig
from blindnull.harness.runner import run_sweep
cfg = ExperimentConfig(trials=40, beacon="sampled", cycle_length=4096, seed=3,
                       output_path=os.path.join(tempfile.mkdtemp(), "b.csv"))
run_sweep(cfg.replace(trials=1))
t = time.perf_counter()
run_sweep(cfg)
print(time.perf_counter() - t)
"""


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def best(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def jacobi_case(n, rng):
    h = crandn(rng, n, n)
    a = h + h.conj().T
    tol = 1e-12 * np.linalg.norm(a)

    def run(kernel):
        return lambda: kernel(a.copy(), np.eye(n, dtype=np.complex128), tol, 100)

    return run


def residual_case(n_sym, rng):
    s = crandn(rng, 2)
    h = crandn(rng, 2, 4)
    f = np.eye(2, dtype=np.complex128)
    p = column_space_projector(crandn(rng, 2, 1))
    w = crandn(rng, n_sym, 2)
    x1 = crandn(rng, n_sym, 4)

    def run(kernel):
        return lambda: kernel(s, h, f, p, w, x1)

    return run


def sweep_seconds(flag):
    env = dict(os.environ, BLINDNULL_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", SWEEP_SNIPPET], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--skip-sweep", action="store_true")
    args = ap.parse_args()
    if kernels.jacobi_sweeps_numba is None:
        sys.exit("numba backend unavailable (not installed or BLINDNULL_NUMBA=0)")
    rng = np.random.default_rng(0)
    cases = [
        (f"jacobi n={n}", jacobi_case(n, rng), kernels.jacobi_sweeps_numpy, kernels.jacobi_sweeps_numba)
        for n in (4, 8, 16)
    ]
    cases += [
        (f"residual N={n}", residual_case(n, rng), kernels.residual_energy_numpy, kernels.residual_energy_numba)
        for n in (1 << 10, 1 << 14)
    ]
    print(f"{'case':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, make, np_k, nb_k in cases:
        t_np = best(make(np_k), args.repeat)
        t_nb = best(make(nb_k), args.repeat)
        print(f"{name:<18}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>9.1f}x")
    if not args.skip_sweep:
        t_np = sweep_seconds("0")
        t_nb = sweep_seconds("1")
        print(f"{'sweep 40 trials':<18}{1e3 * t_np:>12.0f}{1e3 * t_nb:>12.0f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
