"""Compare the compiled single-excitation RK4 kernel with the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--modes 15] [--steps 20000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from rabizeno import _kernels_py, kernels
from rabizeno.model import ModelParams, SqueezeThermal
from rabizeno.se_oracle import _se_couplings


def _inputs(modes: int):
    p = ModelParams(g=0.1, num_modes=modes)
    kappa, nu = _se_couplings(p, SqueezeThermal(beta=0.5))
    return 1 + 0j, np.zeros(2 * modes, dtype=complex), kappa, nu


def _time(fn, args, steps, repeat):
    best = min(timeit.repeat(lambda: fn(*args, 0.0, 1e-3, steps), number=1, repeat=repeat))
    return best / steps


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--modes", type=int, default=15)
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    inputs = _inputs(args.modes)
    rows = [("python", _time(_kernels_py.se_rk4, inputs, args.steps, args.repeat))]
    try:
        from rabizeno import _kernels
    except ImportError:
        print("compiled extension not built; only the fallback is timed")
    else:
        rows.append(("cython", _time(_kernels.se_rk4, inputs, args.steps, args.repeat)))
        c1, y1 = _kernels.se_rk4(*inputs, 0.0, 1e-3, 1000)
        c2, y2 = _kernels_py.se_rk4(*inputs, 0.0, 1e-3, 1000)
        dev = max(abs(c1 - c2), float(np.max(np.abs(np.asarray(y1) - y2))))
        print(f"max backend difference after 1000 steps: {dev:.1e}")

    print(f"se_rk4, M={args.modes}, active backend: {kernels.BACKEND}")
    base = rows[0][1]
    for name, per_step in rows:
        print(f"  {name:<7} {per_step * 1e6:9.2f} us/step   speed-up {base / per_step:6.1f}x")


if __name__ == "__main__":
    main()
