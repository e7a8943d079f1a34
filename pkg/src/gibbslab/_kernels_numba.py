"""Numba-jitted assembly kernels; see `_kernels_numpy` for the reference.

Loops are parallel over output rows only (disjoint writes), so results are
deterministic for a fixed build.
"""

import math
import os

import numpy as np
from numba import njit, prange, set_num_threads

_threads = os.environ.get("GIBBSLAB_NUM_THREADS")
if _threads:
    set_num_threads(max(1, int(_threads)))

METROPOLIS = 0
GAUSSIAN = 1

_SQRT_PI = math.sqrt(math.pi)


@njit(cache=True, inline="always")
def _erfcx(x):
    # exp(x^2) erfc(x); asymptotic tail keeps exp() in range for large x
    if x < 26.0:
        return math.exp(x * x) * math.erfc(x)
    ix2 = 1.0 / (x * x)
    s = 1.0 + ix2 * (-0.5 + ix2 * (0.75 + ix2 * (-1.875 + ix2 * 6.5625)))
    return s / (x * _SQRT_PI)


@njit(cache=True, inline="always")
def _alpha(nu1, nu2, kind, beta, sigma, wg, sg2):
    nb = 0.5 * (nu1 + nu2)
    d = nu1 - nu2
    if kind == METROPOLIS:
        c = 0.5 * beta * sigma * sigma
        rt = math.sqrt(2.0) * sigma
        z = (nb + c) / rt
        y = (c - nb) / rt
        pref = 0.5 * math.exp(-d * d / (8.0 * sigma * sigma))
        t1 = math.erfc(z)
        if y >= 0.0:
            t2 = math.exp(-z * z) * _erfcx(y)
        else:
            t2 = math.exp(-beta * nb) * math.erfc(y)
        return pref * (t1 + t2)
    s2 = sigma * sigma + sg2
    return (math.sqrt(sg2 / s2) * math.exp(-d * d / (8.0 * sigma * sigma))
            * math.exp(-(nb + wg) ** 2 / (2.0 * s2)))


@njit(cache=True)
def _alpha_array(nu1, nu2, kind, beta, sigma, wg, sg2):
    out = np.empty(nu1.size, dtype=np.float64)
    for i in range(nu1.size):
        out[i] = _alpha(nu1[i], nu2[i], kind, beta, sigma, wg, sg2)
    return out


def alpha_values(nu1, nu2, params):
    kind, beta, sigma, wg, sg2 = params
    n1, n2 = np.broadcast_arrays(np.asarray(nu1, float), np.asarray(nu2, float))
    out = _alpha_array(np.ascontiguousarray(n1).ravel(),
                       np.ascontiguousarray(n2).ravel(),
                       int(kind), beta, sigma, wg, sg2)
    return out.reshape(n1.shape)


@njit(cache=True, parallel=True)
def _transition_superop(E, At, kind, beta, sigma, wg, sg2):
    dim = E.size
    T = np.empty((dim * dim, dim * dim), dtype=np.complex128)
    Ac = np.conj(At)
    for r in prange(dim * dim):
        i = r % dim
        j = r // dim
        for l in range(dim):
            for k in range(dim):
                a = _alpha(E[i] - E[k], E[j] - E[l], kind, beta, sigma, wg, sg2)
                T[r, k + dim * l] = a * At[i, k] * Ac[j, l]
    return T


@njit(cache=True, parallel=True)
def _decay_matrix(E, At, kind, beta, sigma, wg, sg2):
    dim = E.size
    M = np.empty((dim, dim), dtype=np.complex128)
    for r in prange(dim * dim):
        k = r // dim
        l = r % dim
        s = 0.0 + 0.0j
        for m in range(dim):
            a = _alpha(E[m] - E[k], E[m] - E[l], kind, beta, sigma, wg, sg2)
            s += a * np.conj(At[m, k]) * At[m, l]
        M[k, l] = s
    return M


@njit(cache=True, parallel=True)
def _coherent_bohr(E, At, kind, beta, sigma, wg, sg2):
    dim = E.size
    B = np.empty((dim, dim), dtype=np.complex128)
    for r in prange(dim * dim):
        i = r // dim
        j = r % dim
        s = 0.0 + 0.0j
        for k in range(dim):
            a = _alpha(E[k] - E[i], E[k] - E[j], kind, beta, sigma, wg, sg2)
            s += a * np.conj(At[k, i]) * At[k, j]
        B[i, j] = 0.5j * math.tanh(0.25 * beta * (E[i] - E[j])) * s
    return B


def transition_superop(E, At, params):
    kind, beta, sigma, wg, sg2 = params
    return _transition_superop(np.ascontiguousarray(E, dtype=np.float64),
                               np.ascontiguousarray(At, dtype=np.complex128),
                               int(kind), beta, sigma, wg, sg2)


def decay_matrix(E, At, params):
    kind, beta, sigma, wg, sg2 = params
    return _decay_matrix(np.ascontiguousarray(E, dtype=np.float64),
                         np.ascontiguousarray(At, dtype=np.complex128),
                         int(kind), beta, sigma, wg, sg2)


def coherent_bohr(E, At, params):
    kind, beta, sigma, wg, sg2 = params
    return _coherent_bohr(np.ascontiguousarray(E, dtype=np.float64),
                          np.ascontiguousarray(At, dtype=np.complex128),
                          int(kind), beta, sigma, wg, sg2)
