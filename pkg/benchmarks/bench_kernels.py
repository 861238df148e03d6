"""Compare the numba and numpy backends of the two hot Lindblad kernels.

    python3 benchmarks/bench_kernels.py --n-max 12 16 20 --repeat 5

Times one Liouvillian application and one no-jump preconditioner solve on a
random dense operator for the Jaynes-Cummings model at ``lam = 0.45``.
"""

import argparse
import timeit

import numpy as np

from istms.lindblad import HilbertConfig, NoJumpInverse, jc_model
from istms.lindblad._kernels import BACKEND, LindbladKernel
from istms.params import SystemParams


def _best(fn, repeat):
    fn()  # warm-up (includes JIT compilation)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench(n_max, repeat, backends):
    m = jc_model(SystemParams(J=10.0, g=1.0, lam=0.45), HilbertConfig.square(n_max))
    D = m.dim
    rng = np.random.default_rng(0)
    X = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
    K = m.heff(m.h_precond)
    rows, outs = [], {}
    for b in backends:
        kern = LindbladKernel(m.heff(), m.jump_ops(), backend=b)
        prec = NoJumpInverse(K, shift=1e-3, backend=b)
        outs[b] = (kern(X), prec.solve(X))
        rows.append((b, _best(lambda: kern(X), repeat), _best(lambda: prec.solve(X), repeat)))
    err = None
    if len(backends) == 2:
        (a1, p1), (a2, p2) = outs[backends[0]], outs[backends[1]]
        err = max(np.max(np.abs(a1 - a2)) / np.max(np.abs(a2)), np.max(np.abs(p1 - p2)) / np.max(np.abs(p2)))
    return D, rows, err


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max", type=int, nargs="+", default=[8, 12, 16, 20])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = ["numba", "numpy"] if BACKEND == "numba" else ["numpy"]
    if BACKEND != "numba":
        print("numba unavailable or disabled (ISTMS_DISABLE_NUMBA); timing numpy only")
    print(f"{'n_max':>5} {'D':>5} {'backend':>7} {'lindblad ms':>12} {'precond ms':>11} {'max rel diff':>13}")
    for n in args.n_max:
        D, rows, err = bench(n, args.repeat, backends)
        for i, (b, tl, tp) in enumerate(rows):
            diff = f"{err:13.2e}" if (err is not None and i == 0) else " " * 13
            print(f"{n:5d} {D:5d} {b:>7} {1e3 * tl:12.2f} {1e3 * tp:11.2f} {diff}")
        if len(rows) == 2:
            (_, l1, p1), (_, l2, p2) = rows
            print(f"{'':11} speed-up  {l2 / l1:10.2f}x {p2 / p1:10.2f}x")


if __name__ == "__main__":
    main()
