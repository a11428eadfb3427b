"""Compare the compiled and pure-Python contraction kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Times the raw kernels on dense random symmetric forms, then the Taylor
coefficients T^0..T^8 of random problems with the module-level kernel swapped.
"""

import argparse
import time
import timeit

import numpy as np

from bifjet import kernels
from bifjet.instances import random_problem
from bifjet.tensor_jet import Jet, derive_tensors, taylor_coefficient


def _forms(rng, n, m, degree):
    p = random_problem(rng, n, m, degree, terms=30)
    t = derive_tensors(p, rng.normal(size=n), degree)
    return [t.form(b) for b in range(1, degree + 1) if t.form(b).idx.shape[0]]


def bench_raw(backends, repeat):
    rng = np.random.default_rng(0)
    rows = []
    for n, m, degree in [(3, 2, 4), (6, 4, 5), (8, 4, 6)]:
        forms = _forms(rng, n, m, degree)
        args = [rng.normal(size=(f.order, n)) for f in forms]
        for name, (contract, contract_free) in backends.items():
            def run():
                for f, V in zip(forms, args):
                    contract(f.idx, f.coeffs, f.scale, V)
                    if f.order > 1:
                        contract_free(f.idx, f.coeffs, f.scale, V[: f.order - 1], n)
            best = min(timeit.repeat(run, number=20, repeat=repeat)) / 20
            rows.append((f"n={n} m={m} deg={degree}", name, best))
    return rows


def bench_taylor(backends, repeat):
    rng = np.random.default_rng(1)
    cases = []
    for _ in range(10):
        n, m = int(rng.integers(2, 6)), int(rng.integers(1, 4))
        p = random_problem(rng, n, m, 5)
        jet = Jet(rng.normal(size=(9, n)))
        cases.append((derive_tensors(p, jet[0], 8), jet))
    rows = []
    saved = kernels.contract, kernels.contract_free
    try:
        for name, pair in backends.items():
            kernels.contract, kernels.contract_free = pair
            def run():
                for t, jet in cases:
                    for q in range(9):
                        taylor_coefficient(t, jet, q)
            rows.append(("T^0..T^8, 10 problems", name, min(timeit.repeat(run, number=1, repeat=repeat))))
    finally:
        kernels.contract, kernels.contract_free = saved
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = kernels.backends()
    if "compiled" not in backends:
        print("compiled extension not built; timing the Python kernels only")
    t0 = time.perf_counter()
    rows = bench_raw(backends, args.repeat) + bench_taylor(backends, args.repeat)
    base = {case: sec for case, name, sec in rows if name == "python"}
    print(f"{'case':28s} {'backend':9s} {'seconds':>11s} {'speedup':>8s}")
    for case, name, sec in rows:
        print(f"{case:28s} {name:9s} {sec:11.6f} {base[case] / sec:8.1f}x")
    print(f"total wall time {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
