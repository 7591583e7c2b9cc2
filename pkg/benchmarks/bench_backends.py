"""Compare the numba kernels with their pure-numpy fallbacks.

Run with ``python benchmarks/bench_backends.py``. A full solve is timed in
two subprocesses, one per value of FRACSPDE_BACKEND, so the import-time
switch is exercised as a user would.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from fracspde import _accel
from fracspde import _mlkernels as K
from fracspde._kernels import causal_sum, scatter_add
from fracspde.specialfn import ASYMPTOTIC_X_MIN, series_threshold

SOLVE = """
import time, numpy as np
from fracspde.params import LatticeSpec, ModelParams
from fracspde.solver import NonlinearitySpec, SolverConfig, polynomial, linear_amplitude, solve
lat = LatticeSpec(10.0, {m})
cfg = SolverConfig(ModelParams(1.8, 0.8, 0.2), lat, 1.0, {k}, seed=1)
spec = NonlinearitySpec(f=polynomial([0, 1, -0.1]), sigma=linear_amplitude(0.1, 0.2), lipschitz_global=True)
u0 = 0.5 * np.exp(-lat.coords() ** 2)
solve(cfg, spec, u0)  # warm-up and compilation
t0 = time.perf_counter()
solve(cfg, spec, u0)
print(time.perf_counter() - t0)
"""


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_kernels(k_steps, n_modes, repeat):
    rng = np.random.default_rng(0)
    w = rng.normal(size=(k_steps + 1, n_modes)) + 1j * rng.normal(size=(k_steps + 1, n_modes))
    f = rng.normal(size=(k_steps, n_modes)) + 1j * rng.normal(size=(k_steps, n_modes))
    idx = rng.integers(0, 4096, size=200_000)
    vals = rng.normal(size=200_000)
    z = -np.geomspace(1e-3, 200.0, 2000)
    a, b = 0.8, 1.2
    args = (series_threshold(a, b), ASYMPTOTIC_X_MIN, K.GL_X, K.GL_W)

    rows = []
    backends = ["numba", "numpy"] if _accel.USE_NUMBA else ["numpy"]
    for name in backends:
        causal_sum(w, f, backend=name)
        scatter_add(np.zeros(4096), idx, vals, backend=name)
        rows.append((f"causal_sum K={k_steps} n={n_modes}", name,
                     best(lambda: causal_sum(w, f, backend=name), repeat)))
        rows.append(("scatter_add 2e5 events", name,
                     best(lambda: scatter_add(np.zeros(4096), idx, vals, backend=name), repeat)))
    if _accel.USE_NUMBA:
        K.ml_array(a, b, z, *args)
        rows.append(("ml_array 2000 points", "numba", best(lambda: K.ml_array(a, b, z, *args), repeat)))
        slow = _accel.python_impl(K.ml_array)
        rows.append(("ml_array 2000 points (outer loop only)", "python", best(lambda: slow(a, b, z, *args), 1)))
    return rows


def bench_solve(m, k_steps):
    rows = []
    for name in ("numba", "numpy"):
        env = dict(os.environ, FRACSPDE_BACKEND=name)
        env.pop("FRACSPDE_DISABLE_NUMBA", None)
        out = subprocess.run([sys.executable, "-c", SOLVE.format(m=m, k=k_steps)], env=env,
                             capture_output=True, text=True, check=True)
        rows.append((f"solve M={m} K={k_steps}", name, float(out.stdout)))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=256)
    ap.add_argument("--modes", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-solve", action="store_true", help="skip the subprocess solve timing")
    args = ap.parse_args(argv)
    rows = bench_kernels(args.steps, args.modes, args.repeat)
    if not args.no_solve:
        rows += bench_solve(args.modes, args.steps)
    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'backend':<7}  seconds")
    for case, name, sec in rows:
        print(f"{case:<{width}}  {name:<7}  {sec:.4g}")


if __name__ == "__main__":
    main()
