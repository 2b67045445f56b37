"""Compiled vs numpy kernels: per-kernel timings and a full field solve.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--refine 1]
"""

import argparse
import time

import numpy as np

from enesim import _kernels
from enesim.fieldsolver import _constrain, assemble, solve_laplace
from enesim.geometry import GridSpec, ModeDrive, rasterize, shallow_si


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--refine", type=int, default=1)
    args = ap.parse_args(argv)

    grid = rasterize(shallow_si(), GridSpec(refine=args.refine))
    drive = ModeDrive.for_mode("DM")
    fixed = grid.is_dirichlet
    aP, aE, aN, b = _constrain(assemble(grid), fixed, drive.potentials(grid.electrode_mask))
    x = np.random.default_rng(0).standard_normal(aP.shape)
    print(f"grid {grid.nx} x {grid.ny} ({aP.size} nodes), best of {args.repeat}")

    backends = ["python"]
    try:
        _kernels.implementation("cython")
        backends.insert(0, "cython")
    except ImportError:
        print("compiled core not built; timing the fallback only")

    rows = {}
    for name in backends:
        k = _kernels.implementation(name)
        out = np.empty_like(x)
        d = k.dic_factor(aP, aE, aN)
        phi = np.zeros_like(x)
        rows[name] = {
            "stencil_apply": best_of(lambda: k.stencil_apply(aP, aE, aN, x, out), args.repeat),
            "dic_factor": best_of(lambda: k.dic_factor(aP, aE, aN), args.repeat),
            "dic_solve": best_of(lambda: k.dic_solve(d, aE, aN, x, out), args.repeat),
            "sor_redblack x10": best_of(lambda: k.sor_redblack(aP, aE, aN, b, phi, 1.9, 10), args.repeat),
            "solve_laplace": best_of(lambda: solve_laplace(grid, drive, backend=name), max(1, args.repeat // 2)),
        }

    print(f"{'kernel':<18}" + "".join(f"{n:>14}" for n in backends) + ("     speedup" if len(backends) == 2 else ""))
    for key in rows[backends[0]]:
        line = f"{key:<18}" + "".join(f"{rows[n][key] * 1e3:>11.2f} ms" for n in backends)
        if len(backends) == 2:
            line += f"{rows['python'][key] / rows['cython'][key]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
