"""Timing comparison of the compiled and pure stepping kernels.

Runs the three sequential hot loops (path simulation, Riccati triple,
1-D grid solver) through the public API under each available backend
and prints wall-clock medians.  Usage:

    python3 benchmarks/bench_backends.py [--steps 20000] [--repeats 5]
"""

import argparse
import os
import statistics
import time

from kalzak import _backends, classic_scalar, run_filter, run_zakai, simulate_paths
from kalzak.zakai import SolverOptions


def _time(fn, repeats):
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=20000,
                    help="time steps for the path/filter loops")
    ap.add_argument("--grid-steps", type=int, default=2000,
                    help="time steps for the 1-D grid solver")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    spec = classic_scalar()
    dt = 1e-3
    # one fixed path per task so backends see identical work
    path = simulate_paths(spec, T=args.steps * dt, dt=dt, seed=1)[0]
    gpath = simulate_paths(spec, T=args.grid_steps * dt, dt=dt, seed=1)[0]
    frun = run_filter(spec, gpath)
    opts = SolverOptions(store_series=False, cfl="off")

    tasks = {
        "simulate": lambda: simulate_paths(
            spec, T=args.steps * dt, dt=dt, seed=1),
        "filter": lambda: run_filter(spec, path),
        "zakai-1d": lambda: run_zakai(
            spec, gpath, h=0.05, filter_run=frun, opts=opts),
    }

    names = _backends.available()
    if "compiled" not in names:
        print("note: compiled extension not built; timing pure only")

    results = {}
    for backend in names:
        os.environ["KALZAK_BACKEND"] = backend
        for task, fn in tasks.items():
            fn()  # warm caches before timing
            results[(task, backend)] = _time(fn, args.repeats)
    os.environ.pop("KALZAK_BACKEND", None)

    width = max(len(t) for t in tasks) + 2
    header = f"{'task':<{width}}" + "".join(f"{b:>12}" for b in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for task in tasks:
        row = f"{task:<{width}}"
        for b in names:
            row += f"{results[(task, b)]:>12.4f}"
        if len(names) == 2:
            ratio = results[(task, "pure")] / results[(task, "compiled")]
            row += f"{ratio:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
