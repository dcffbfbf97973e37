"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

The end-to-end row runs a figure-eight sweep in a subprocess per backend,
since the backend is fixed at import.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from dehnfill import _kernels_py

try:
    from dehnfill import _kernels
except ImportError:
    _kernels = None

SWEEP = (
    "import time; from dehnfill import load_triangulation; "
    "from dehnfill.equations import build_system; from dehnfill.solver import solve, sweep, sweep_cells; "
    "from importlib import resources; "
    "T = load_triangulation(resources.files('dehnfill') / 'fixtures' / 'figure_eight.json'); "
    "b, base, _ = solve(build_system(T)); t = time.perf_counter(); "
    "sweep(b, base, 0, sweep_cells((-12, 12))); print(time.perf_counter() - t)"
)


def cases(rng):
    xs = rng.uniform(-10, 10, 1000)
    zs = rng.standard_normal(1000) + 1j * rng.standard_normal(1000)
    n = 24
    A1 = rng.integers(-2, 3, (n, n)).astype(float)
    A2 = rng.integers(-2, 3, (n, n)).astype(float)
    C = np.zeros(n, dtype=complex)
    z = zs[:n]
    L1, L2 = np.log(z), np.log(1 - z)
    return {
        "lobachevsky x1000": lambda m: [m.lobachevsky(x) for x in xs],
        "tetra_volumes n=1000": lambda m: m.tetra_volumes(zs),
        "residual_jacobian n=24": lambda m: m.residual_jacobian(A1, A2, C, L1, L2, z),
    }


def sweep_time(pure: bool) -> float:
    env = dict(os.environ, DEHNFILL_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", SWEEP], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<26}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, fn in cases(rng).items():
        tp = min(timeit.repeat(lambda: fn(_kernels_py), number=10, repeat=args.repeat)) / 10
        tc = min(timeit.repeat(lambda: fn(_kernels), number=10, repeat=args.repeat)) / 10
        print(f"{name:<26}{tp * 1e3:>12.3f}{tc * 1e3:>12.3f}{tp / tc:>10.1f}")
    tp, tc = sweep_time(True), sweep_time(False)
    print(f"{'sweep -12..12 (end to end)':<26}{tp * 1e3:>12.1f}{tc * 1e3:>12.1f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
