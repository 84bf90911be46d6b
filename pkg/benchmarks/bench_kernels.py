"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--sizes 16,30] [--json out.json]

Each row reports the best-of-``repeat`` wall time per call for both backends,
their ratio, and the largest absolute disagreement between their outputs.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from rlrqaoa.graph import IsingInstance
from rlrqaoa.instances import assign_weights, gen_random_regular
from rlrqaoa.kernels import get_backend


def best_time(fn, repeat):
    out = fn()  # warm-up (triggers JIT compilation)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def max_diff(a, b):
    if isinstance(a, tuple):
        return max(max_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))) if np.size(a) else 0.0


def instance(n, d, fields, seed=0):
    rng = np.random.default_rng(seed)
    inst = assign_weights(gen_random_regular(n, d, rng), "gaussian", rng)
    if fields:
        inst = IsingInstance(inst.n_original, inst.weights, {v: float(rng.normal()) for v in range(n)})
    return inst


def cases(sizes, repeat):
    gammas = np.linspace(0, 2 * np.pi, 2000)
    for n in sizes:
        for fields in (False, True):
            A = instance(n, 3, fields).arrays
            args = (A.W, A.h, A.eu, A.ev, A.ew, A.ptr, A.nbr, A.nbr_w)
            tag = f"n={n} d=3{' h' if fields else ''}"
            yield f"energy_coeffs x2000  {tag}", lambda k: k.energy_coeffs(gammas, *args)
            yield f"edge_terms_dgamma    {tag}", lambda k: k.edge_terms_dgamma(0.37, *args)
    for n in (16, 20, 22):
        A = instance(n, 3, False).arrays
        tol = 1e-9 * (1 + np.abs(A.ew).sum())
        yield (f"brute_force          n={n}",
               lambda k: k.brute_force(A.h, A.ptr, A.nbr, A.nbr_w, 0.0, True, tol)[::2])


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--sizes", default="16,30")
    p.add_argument("--json")
    args = p.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]
    nb, npy = get_backend("numba"), get_backend("numpy")
    rows = []
    print(f"{'kernel':42s} {'numba s':>11s} {'numpy s':>11s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, call in cases(sizes, args.repeat):
        t_nb, out_nb = best_time(lambda: call(nb), args.repeat)
        t_np, out_np = best_time(lambda: call(npy), args.repeat)
        diff = max_diff(out_nb, out_np)
        rows.append({"kernel": name.strip(), "numba_s": t_nb, "numpy_s": t_np, "speedup": t_np / t_nb,
                     "max_abs_diff": diff})
        print(f"{name:42s} {t_nb:11.3e} {t_np:11.3e} {t_np / t_nb:8.1f} {diff:11.2e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
