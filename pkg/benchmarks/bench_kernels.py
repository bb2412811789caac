"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--N 512] [--m 1] [--repeat 3]

Both paths run in the same process by toggling ``_accel.USE_NUMBA``; numba
compilation happens in a warm-up call that is not timed.
"""
import argparse
import time

import numpy as np

from abelfem import _accel
from abelfem.assembly import assemble
from abelfem.mesh import build_space, build_uniform_mesh
from abelfem.norms import cosine_coeffs
from abelfem.operator import experiment1
from abelfem.quadrature import QuadPolicy
from abelfem.solve import solve


def _best(fn, repeat):
    fn()  # warm-up / JIT
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=512)
    ap.add_argument("--m", type=int, default=1)
    ap.add_argument("--modes", type=int, default=8192)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _accel.HAS_NUMBA:
        raise SystemExit("numba not installed; nothing to compare")

    prob = experiment1()
    space = build_space(build_uniform_mesh(args.N), args.m)
    policy = QuadPolicy(args.m, prob.alpha, 1.0 / args.N)
    sol = solve(assemble(space, prob, policy), space).solution

    cases = {
        f"assemble N={args.N} m={args.m}": lambda: assemble(space, prob, policy).A,
        f"cosine coefficients ({args.modes} modes)": lambda: cosine_coeffs(sol, args.modes),
    }
    print(f"{'case':<36} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8} {'max rel diff':>13}")
    for name, fn in cases.items():
        _accel.USE_NUMBA = True
        t_nb, a = _best(fn, args.repeat)
        _accel.USE_NUMBA = False
        t_np, b = _best(fn, args.repeat)
        _accel.USE_NUMBA = True
        diff = float(np.max(np.abs(a - b)) / np.max(np.abs(b)))
        print(f"{name:<36} {t_nb:10.3f} {t_np:10.3f} {t_np / t_nb:8.1f} {diff:13.1e}")


if __name__ == "__main__":
    main()
