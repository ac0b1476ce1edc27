"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from heisurf import _pykernels
from heisurf import fixtures as fx
from heisurf import geodesic as gd
from heisurf import surface as sf
from heisurf.poly import random_poly

try:
    from heisurf import _ckernels
except ImportError:
    _ckernels = None


def cases():
    rng = np.random.default_rng(fx.SEED)
    F = random_poly(rng, 5, 3, n_terms=12)
    plan = F._jet_plan()
    X = rng.uniform(-1, 1, (20_000, 5))
    yield "jet stack, 20k points, deg 3 in 5 vars", lambda k: k.eval_stack_batch(*plan, X)

    phi = fx.geodesic_graph()
    q0 = np.array(fx.GEODESIC_Q0)
    E = sf.tangent_bases(sf.intrinsic_normal(phi, q0)[None])[0]
    w = E[0] / np.linalg.norm(E[0])
    y0 = gd.initial_state(phi, sf.lift_psi(phi, q0), w, fx.GEODESIC_BOX).to_array()
    gplan = phi._jet_plan()
    lo, hi = fx.GEODESIC_BOX.lo, fx.GEODESIC_BOX.hi
    yield "RK4 geodesic, 1000 steps", lambda k: k.rk4_geodesic(*gplan, 2, y0, 1e-3, 1000, lo, hi)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    if _ckernels is None:
        print("compiled extension not built; timing the fallback only")
    print(f"{'case':42s} " + " ".join(f"{name:>12s}" for name, _ in backends) + "   speedup")
    for label, fn in cases():
        times = []
        for _, mod in backends:
            fn(mod)  # warm-up
            times.append(min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)))
        cols = " ".join(f"{t * 1e3:10.2f}ms" for t in times)
        speed = f"{times[0] / times[1]:8.1f}x" if len(times) == 2 else ""
        print(f"{label:42s} {cols} {speed}")


if __name__ == "__main__":
    main()
