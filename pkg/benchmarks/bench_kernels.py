#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the three hot assembly kernels (transition superoperator, decay
matrix, coherent term) on representative system sizes with both backends
in-process and prints a timing table. The backends must agree to ~1e-13;
the comparison is asserted here as well.

Note GIBBSLAB_NO_NUMBA only affects which backend the *package* uses; this
script imports both kernel modules directly.
"""

import time

import numpy as np

from gibbslab import _kernels_numpy
from gibbslab.linalg import hermitian_eig
from gibbslab.lindblad import Weight
from gibbslab.spinsys import PAULI, build_tfim_chain
from gibbslab.linalg import embed

try:
    from gibbslab import _kernels_numba
except ImportError:
    _kernels_numba = None


def model(n):
    H = build_tfim_chain(n, 1.0, 1.05)
    spec = hermitian_eig(H.to_dense())
    At = spec.to_eigenbasis(embed(PAULI["X"], (0,), n))
    return spec.evals, At


def run(kernels, E, At, params, reps):
    out = {}
    for name in ("transition_superop", "decay_matrix", "coherent_bohr"):
        fn = getattr(kernels, name)
        fn(E, At, params)               # warm-up (includes jit compile)
        t0 = time.perf_counter()
        for _ in range(reps):
            res = fn(E, At, params)
        out[name] = ((time.perf_counter() - t0) / reps, res)
    return out


def main():
    w = Weight.metropolis(1.0, 1.0)
    params = w.accel_params()
    print(f"{'n':>3} {'kernel':<22} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for n, reps in ((3, 20), (5, 5), (6, 2)):
        E, At = model(n)
        ref = run(_kernels_numpy, E, At, params, reps)
        if _kernels_numba is None:
            for name, (dt, _) in ref.items():
                print(f"{n:>3} {name:<22} {dt * 1e3:>9.1f}ms {'-':>10} {'-':>8}")
            continue
        jit = run(_kernels_numba, E, At, params, reps)
        for name in ref:
            dt_np, res_np = ref[name]
            dt_nb, res_nb = jit[name]
            err = np.abs(res_np - res_nb).max()
            assert err <= 1e-12 * max(1.0, np.abs(res_np).max()), (name, err)
            print(f"{n:>3} {name:<22} {dt_np * 1e3:>9.1f}ms {dt_nb * 1e3:>9.1f}ms "
                  f"{dt_np / dt_nb:>7.1f}x")


if __name__ == "__main__":
    main()
