#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python twins.

Two workloads, matching where the kernels actually burn time:

* instrumented 4-bit-window scalar multiplication on the 256-bit curve
  (point kernels), and
* exact integer LLL on a planted hidden-number lattice (big-integer
  loops), reported with and without the float pre-reduction pass.

Usage: python3 benchmarks/bench_backends.py [--quick]
"""

import argparse
import random
import statistics
import time

from sleepspike import _purecore
from sleepspike.curves import get_curve
from sleepspike.lattice import _float_prereduce
from sleepspike.signer import NoncePolicy, ecdsa_sign, generate_key, message_hash

try:
    from sleepspike import _fastcore
except ImportError:
    _fastcore = None


def _time(fn, repeats):
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best.append(time.perf_counter() - t0)
    return min(best), statistics.median(best)


def bench_scalar_mul(backend, curve, scalars):
    from sleepspike import engines

    saved = (engines.jac_double, engines.jac_add, engines.jac_add_mixed)
    engines.jac_double = backend.jac_double
    engines.jac_add = backend.jac_add
    engines.jac_add_mixed = backend.jac_add_mixed
    try:
        t0 = time.perf_counter()
        for k in scalars:
            engines.mul_w4_identity_table(k, curve.G, curve)
        return (time.perf_counter() - t0) / len(scalars)
    finally:
        engines.jac_double, engines.jac_add, engines.jac_add_mixed = saved


def build_hnp_basis(curve, d, ell, seed):
    from sleepspike.lattice import build_instance, build_lattice

    rng = random.Random(seed)
    priv, _ = generate_key(curve, rng)
    sigs = []
    for i in range(d):
        k = rng.randrange(1, 1 << (curve.bits - ell))
        m = f"bench {i}".encode()
        sigs.append(
            (ecdsa_sign(m, priv, curve, policy=NoncePolicy.injected(k)), message_hash(m, curve))
        )
    return build_lattice(build_instance(sigs, [ell] * d, curve))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()

    backends = [("python", _purecore)]
    if _fastcore is not None:
        backends.append(("cython", _fastcore))
    else:
        print("note: compiled extension not built; timing the pure backend only\n")

    p256 = get_curve("p256")
    rng = random.Random(1)
    n_mults = 50 if args.quick else 300
    scalars = [rng.randrange(1, p256.n) for _ in range(n_mults)]

    print(f"scalar multiplication (w4 window, p256, {n_mults} scalars):")
    base = None
    for name, mod in backends:
        per = bench_scalar_mul(mod, p256, scalars)
        speed = f"  {name:>7}: {per * 1e3:7.3f} ms/mult"
        if base is None:
            base = per
        else:
            speed += f"  ({base / per:.2f}x vs python)"
        print(speed)

    d = 12 if args.quick else 24
    curve = get_curve("secp128r1") if args.quick else get_curve("p256")
    basis = build_hnp_basis(curve, d, 16 if args.quick else 14, seed=3)
    print(f"\nexact LLL on a planted HNP basis ({curve.name}, dim {d + 2}):")
    base = None
    for name, mod in backends:
        t0 = time.perf_counter()
        mod.lll_reduce_rows(basis, 99, 100)
        per = time.perf_counter() - t0
        line = f"  {name:>7}: {per:7.2f} s"
        if base is None:
            base = per
        else:
            line += f"  ({base / per:.2f}x vs python)"
        print(line)

    print("\nexact LLL after the float pre-reduction (the shipped path):")
    for name, mod in backends:
        work = [list(r) for r in basis]
        t0 = time.perf_counter()
        _float_prereduce(work, 0.99)
        pre = time.perf_counter() - t0
        t0 = time.perf_counter()
        mod.lll_reduce_rows(work, 99, 100)
        per = time.perf_counter() - t0
        print(f"  {name:>7}: {pre:5.2f} s pre + {per:5.2f} s exact")


if __name__ == "__main__":
    main()
