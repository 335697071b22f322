"""Compare the compiled and pure-Python Dormand-Prince kernels.

Integrates the same trajectory with both backends, checks that they agree
and reports wall time, steps per second and the speed-up.  Usage::

    python3 benchmarks/bench_integrator.py [--duration SECONDS] [--repeat N]
"""

import argparse
import time
import warnings

import numpy as np

from mmopto import presets
from mmopto.errors import ValidityWarning
from mmopto.model import DriveConfig
from mmopto.oracle import HAVE_COMPILED, InitialState, integrate
from mmopto.units import MHZ, NM, UW


def run(backend, duration, repeat):
    model = presets.table_model("fig2", n_modes=2, mech=presets.mechanics(q=1000))
    drive = DriveConfig(1.0 * MHZ, 2000 * UW, fiber_efficiency=0.6)
    best, traj = np.inf, None
    for _ in range(repeat):
        start = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            traj = integrate(model, drive, 0.5 * NM, InitialState(c0=1e3), duration, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best, traj


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=2e-4, help="simulated time in seconds (default 2e-4)")
    ap.add_argument("--repeat", type=int, default=3, help="best of N runs (default 3)")
    args = ap.parse_args(argv)

    if not HAVE_COMPILED:
        print("compiled kernel not built; only the Python fallback is available")
    backends = ["compiled", "python"] if HAVE_COMPILED else ["python"]
    results = {}
    for name in backends:
        wall, traj = run(name, args.duration, args.repeat)
        results[name] = (wall, traj)
        print(f"{name:9s} {wall * 1e3:10.2f} ms  {traj.n_steps:8d} steps  {traj.n_steps / wall:12.0f} steps/s")
    if len(results) == 2:
        (tc, a), (tp, b) = results["compiled"], results["python"]
        dev = np.max(np.abs(a.mech_amp - b.mech_amp)) / np.max(np.abs(a.mech_amp))
        print(f"speed-up  {tp / tc:.1f}x   max relative difference {dev:.1e}")


if __name__ == "__main__":
    main()
