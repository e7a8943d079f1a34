"""Pure-numpy implementations of the hot assembly kernels.

These are the reference implementations; `_kernels_numba` provides jitted
equivalents selected through `_accel`. Both must agree to ~1e-13 relative.

Weight parameters travel as the tuple ``(kind, beta, sigma, wg, sg2)`` with
``kind`` 0 for the Metropolis filter and 1 for the Gaussian filter; ``wg``
and ``sg2`` (the Gaussian centre and variance) are ignored for Metropolis.
"""

import numpy as np
from scipy.special import erfc, erfcx

METROPOLIS = 0
GAUSSIAN = 1


def alpha_values(nu1, nu2, params):
    """Transition coefficient alpha(nu1, nu2), broadcast over arrays."""
    kind, beta, sigma, wg, sg2 = params
    nu1 = np.asarray(nu1, dtype=float)
    nu2 = np.asarray(nu2, dtype=float)
    nb = 0.5 * (nu1 + nu2)
    d = nu1 - nu2
    if kind == METROPOLIS:
        c = 0.5 * beta * sigma * sigma
        rt = np.sqrt(2.0) * sigma
        z = (nb + c) / rt
        y = (c - nb) / rt
        pref = 0.5 * np.exp(-d * d / (8.0 * sigma * sigma))
        t1 = erfc(z)
        # two algebraically equal branches; the split keeps exp arguments <= 0
        t2_hi = np.exp(-z * z) * erfcx(np.maximum(y, 0.0))
        t2_lo = np.exp(-beta * np.maximum(nb, 0.0)) * erfc(np.minimum(y, 0.0))
        t2 = np.where(y >= 0.0, t2_hi, t2_lo)
        return pref * (t1 + t2)
    s2 = sigma * sigma + sg2
    return (np.sqrt(sg2 / s2) * np.exp(-d * d / (8.0 * sigma * sigma))
            * np.exp(-(nb + wg) ** 2 / (2.0 * s2)))


def transition_superop(E, At, params):
    """Dense transition part in the energy eigenbasis, column-stacking vec.

    T[i + dim*j, k + dim*l] = alpha(E_i - E_k, E_j - E_l) At[i,k] conj(At[j,l])
    """
    dim = E.size
    nu = E[:, None] - E[None, :]
    Ac = At.conj()
    T = np.empty((dim * dim, dim * dim), dtype=np.complex128)
    for j in range(dim):
        a = alpha_values(nu[:, :, None], nu[j][None, None, :], params)  # (i,k,l)
        blk = a * At[:, :, None] * Ac[j][None, None, :]
        # columns are k + dim*l -> order axes (i, l, k)
        T[j * dim:(j + 1) * dim, :] = blk.transpose(0, 2, 1).reshape(dim, dim * dim)
    return T


def decay_matrix(E, At, params):
    """M[k,l] = sum_m alpha(E_m - E_k, E_m - E_l) conj(At[m,k]) At[m,l]."""
    dim = E.size
    nu = E[:, None] - E[None, :]
    M = np.zeros((dim, dim), dtype=np.complex128)
    chunk = max(1, (1 << 22) // (dim * dim))
    for m0 in range(0, dim, chunk):
        m1 = min(dim, m0 + chunk)
        a = alpha_values(nu[m0:m1, :, None], nu[m0:m1, None, :], params)  # (m,k,l)
        M += np.einsum("mkl,mk,ml->kl", a, At[m0:m1].conj(), At[m0:m1])
    return M


def coherent_bohr(E, At, params):
    """Coherent term that makes the generator exactly KMS-detailed-balanced.

    B[i,j] = (i/2) tanh(beta (E_i - E_j)/4)
             * sum_k alpha(E_k - E_i, E_k - E_j) conj(At[k,i]) At[k,j]
    """
    _, beta = params[0], params[1]
    dim = E.size
    nu = E[:, None] - E[None, :]
    S = np.zeros((dim, dim), dtype=np.complex128)
    chunk = max(1, (1 << 22) // (dim * dim))
    for k0 in range(0, dim, chunk):
        k1 = min(dim, k0 + chunk)
        a = alpha_values(nu[k0:k1, :, None], nu[k0:k1, None, :], params)  # (k,i,j)
        S += np.einsum("kij,ki,kj->ij", a, At[k0:k1].conj(), At[k0:k1])
    return 0.5j * np.tanh(0.25 * beta * (E[:, None] - E[None, :])) * S
