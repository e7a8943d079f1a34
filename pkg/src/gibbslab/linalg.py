"""Dense complex linear algebra: spectra, Gibbs states, norms, superoperators.

Fixed conventions:
  * site 0 is the leftmost (most significant) tensor factor;
  * vectorization is column-stacking, ``vec(X) = X.flatten(order="F")``,
    so the superoperator of X -> P X Q is ``kron(Q.T, P)``;
  * superoperators produced by this package store their dense matrix in the
    energy eigenbasis of the underlying Hamiltonian and convert on the way
    in and out of ``apply``.

Dense superoperators are limited to n <= 6 qubits (matrices of side 4^n),
the matrix-free action to n <= 10.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (InvalidParameterError, NumericDomainError,
                     StiffnessError)
from .spinsys import as_region

DENSE_MAX_QUBITS = 6
ODE_MAX_QUBITS = 10

EIG_RESIDUAL_TOL = 1e-9
GAP_KERNEL_TOL = 1e-10


# -- elementary helpers ----------------------------------------------------

def dag(M):
    return M.conj().T


def op_norm(M):
    return float(np.linalg.norm(M, 2))


def trace_norm(M):
    return float(np.linalg.svd(M, compute_uv=False).sum())


def trace_distance(a, b):
    if a.shape != b.shape:
        raise InvalidParameterError("trace_distance needs equal shapes")
    return trace_norm(a - b)


def frob(M):
    return float(np.linalg.norm(M))


def vec(X):
    return X.reshape(-1, order="F")


def unvec(v, dim):
    return v.reshape(dim, dim, order="F")


def super_left(P):
    return np.kron(np.eye(P.shape[0]), P)


def super_right(Q):
    return np.kron(Q.T, np.eye(Q.shape[0]))


def super_sandwich(P, Q):
    """Superoperator of X -> P X Q."""
    return np.kron(Q.T, P)


def choi_matrix(S):
    """Choi matrix of a dense superoperator given in the same basis."""
    d = int(np.sqrt(S.shape[0]))
    S4 = S.reshape(d, d, d, d)           # S4[j,i,l,k] = S[i + d*j, k + d*l]
    return np.ascontiguousarray(S4.transpose(1, 3, 0, 2)).reshape(d * d, d * d)


# -- qubit tensor manipulation ---------------------------------------------

def qubit_permute(M, src_order):
    """Reorder tensor factors of M from ``src_order`` to 0..n-1."""
    n = len(src_order)
    T = M.reshape([2] * (2 * n))
    pos = {q: i for i, q in enumerate(src_order)}
    perm = [pos[q] for q in range(n)]
    T = T.transpose(perm + [p + n for p in perm])
    return np.ascontiguousarray(T).reshape(2 ** n, 2 ** n)


def embed(op, support, n):
    """Embed an operator on ``support`` into the full 2^n space."""
    support = tuple(support)
    rest = [s for s in range(n) if s not in support]
    full = np.kron(op, np.eye(2 ** len(rest), dtype=complex))
    return qubit_permute(full, list(support) + rest)


def partial_trace(rho, A, n):
    """Trace out region A, preserving the order of the remaining qubits."""
    if rho.shape != (2 ** n, 2 ** n):
        raise InvalidParameterError(f"state dimension does not match n={n}")
    A = as_region(A, n, allow_empty=True)
    T = rho.reshape([2] * (2 * n))
    k = n
    for s in sorted(A, reverse=True):
        T = np.trace(T, axis1=s, axis2=s + k)
        k -= 1
    return T.reshape(2 ** k, 2 ** k)


def insert_maximally_mixed(rho_rest, A, n):
    """Tensor tau_A into a state on the complement of A, restoring order."""
    A = as_region(A, n, allow_empty=True)
    if not A:
        return rho_rest.copy()
    rest = [s for s in range(n) if s not in A]
    tau = np.eye(2 ** len(A), dtype=complex) / 2 ** len(A)
    return qubit_permute(np.kron(tau, rho_rest), list(A) + rest)


# -- spectra ----------------------------------------------------------------

@dataclass
class Spectrum:
    """Eigen-decomposition plus the deduplicated Bohr frequency grid.

    ``bohr_index[i, j]`` maps the energy difference E_i - E_j to its bin in
    ``bohr``; the grid always contains 0 and is exactly sign-symmetric.
    """

    evals: np.ndarray
    evecs: np.ndarray
    bohr: np.ndarray
    bohr_index: np.ndarray
    dedup_tol: float

    @property
    def dim(self):
        return self.evals.size

    @property
    def op_norm(self):
        return float(np.abs(self.evals).max()) if self.dim else 0.0

    def pairs_for(self, nu_index):
        """Ordered index pairs (i, j) collected in Bohr bin ``nu_index``."""
        ii, jj = np.nonzero(self.bohr_index == nu_index)
        return list(zip(ii.tolist(), jj.tolist()))

    def to_eigenbasis(self, M):
        return dag(self.evecs) @ M @ self.evecs

    def from_eigenbasis(self, M):
        return self.evecs @ M @ dag(self.evecs)


def _dedup_bohr(E, tol):
    diffs = E[:, None] - E[None, :]
    pos = np.sort(diffs[diffs > tol])
    groups = []
    if pos.size:
        start = 0
        for i in range(1, pos.size + 1):
            if i == pos.size or pos[i] - pos[i - 1] > tol:
                groups.append(pos[start:i].mean())
                start = i
    pos_reps = np.asarray(groups)
    bohr = np.concatenate([-pos_reps[::-1], [0.0], pos_reps])
    zero_at = pos_reps.size
    # nearest nonneg representative, then apply the sign
    absd = np.abs(diffs)
    edges = (np.concatenate([[0.0], pos_reps[:-1]]) + pos_reps) / 2 if pos_reps.size else np.empty(0)
    k = np.searchsorted(edges, absd.ravel()).reshape(absd.shape)  # 0 => zero bin
    idx = zero_at + np.sign(diffs).astype(np.int64) * k
    return bohr, idx.astype(np.int32)


def hermitian_eig(M, dedup_tol=None):
    """Spectrum of a Hermitian matrix; raises on non-Hermitian input."""
    M = np.asarray(M, dtype=complex)
    scale = max(1.0, float(np.abs(M).max()) if M.size else 0.0)
    if np.abs(M - dag(M)).max() > 1e-10 * scale:
        raise NumericDomainError("matrix is not Hermitian to 1e-10")
    E, U = np.linalg.eigh(M)
    resid = op_norm(M - (U * E) @ dag(U))
    if resid > EIG_RESIDUAL_TOL * max(1.0, float(np.abs(E).max())):
        raise NumericDomainError(f"eigendecomposition residual {resid:.3e}")
    tol = dedup_tol if dedup_tol is not None else 1e-9 * max(1.0, float(np.abs(E).max()))
    bohr, idx = _dedup_bohr(E, tol)
    return Spectrum(E, U, bohr, idx, tol)


# -- Gibbs states ------------------------------------------------------------

PROB_FLOOR = 1e-300


@dataclass
class GibbsState:
    beta: float
    spec: Spectrum
    probs: np.ndarray          # eigenbasis populations, sum 1
    logZ: float
    floored: bool
    _powers: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self):
        return self.spec.dim

    @property
    def rho(self):
        return self.power(1.0)

    def power(self, s):
        """rho^s as a dense matrix in the computational basis."""
        if s not in self._powers:
            p = np.maximum(self.probs, PROB_FLOOR) if s < 0 else self.probs
            self._powers[s] = self.spec.from_eigenbasis(np.diag(p.astype(complex) ** s))
        return self._powers[s]

    def prob_power(self, s):
        p = np.maximum(self.probs, PROB_FLOOR) if s < 0 else self.probs
        return p ** s


def gibbs(spec, beta):
    if beta <= 0:
        raise InvalidParameterError("beta must be positive")
    E = spec.evals
    shifted = E - E.min()
    w = np.exp(-beta * shifted)
    Z = w.sum()
    logZ = float(np.log(Z) - beta * E.min())
    p = w / Z
    floored = bool((p < PROB_FLOOR).any())
    return GibbsState(float(beta), spec, p, logZ, floored)


def kms_inner(g, X, Y):
    """KMS inner product Tr[X^dag rho^(1/2) Y rho^(1/2)]."""
    s = np.sqrt(g.probs)
    Xe = g.spec.to_eigenbasis(X)
    Ye = g.spec.to_eigenbasis(Y)
    return complex(np.sum(Xe.conj() * Ye * np.outer(s, s)))


def kms_norm(g, X):
    val = kms_inner(g, X, X).real
    return float(np.sqrt(max(val, 0.0)))


# -- superoperators ----------------------------------------------------------

@dataclass
class SuperOp:
    """A superoperator, dense and/or matrix-free, stored in the energy basis.

    ``matrix`` acts on column-stacked vectorizations of energy-basis
    matrices. ``action`` is an equivalent closure for the matrix-free
    backend. ``kms_sqrt`` holds (rho_i rho_j)^(1/4) in vec order and enables
    the spectral machinery for detailed-balanced generators.
    """

    dim: int
    spec: Spectrum | None = None
    matrix: np.ndarray | None = None
    action: object = None
    kms_sqrt: np.ndarray | None = None
    label: str = ""
    _sym_cache: tuple | None = field(default=None, repr=False)

    @property
    def dim2(self):
        return self.dim * self.dim

    def apply_energy(self, X):
        if self.matrix is not None:
            return unvec(self.matrix @ vec(X), self.dim)
        if self.action is None:
            raise InvalidParameterError("superoperator has no dense matrix or action")
        return self.action(X)

    def apply_energy_free(self, X):
        """Force the matrix-free path (cross-checks against the dense one)."""
        if self.action is None:
            raise InvalidParameterError("no matrix-free action available")
        return self.action(X)

    def apply(self, X):
        """Apply to a computational-basis matrix."""
        if self.spec is None:
            return self.apply_energy(X)
        return self.spec.from_eigenbasis(self.apply_energy(self.spec.to_eigenbasis(X)))

    def to_computational(self):
        if self.matrix is None:
            raise InvalidParameterError("dense matrix not available")
        if self.spec is None:
            return self.matrix
        U = self.spec.evecs
        K = np.kron(U.conj(), U)      # vec(U X U^dag) = K vec(X)
        return K @ self.matrix @ dag(K)

    def symmetrized(self):
        """KMS symmetrization of the Heisenberg adjoint: s * L^dag / s."""
        if self.matrix is None or self.kms_sqrt is None:
            raise InvalidParameterError("symmetrization needs a dense matrix and KMS data")
        s = self.kms_sqrt
        return (s[:, None] * dag(self.matrix)) / s[None, :]

    def db_residual(self):
        G = self.symmetrized()
        return float(np.linalg.norm(G - dag(G)) / max(1.0, np.linalg.norm(G)))

    def sym_eig(self):
        """Eigen-system of the Hermitized KMS symmetrization (cached)."""
        if self._sym_cache is None:
            G = self.symmetrized()
            G = 0.5 * (G + dag(G))
            lam, V = np.linalg.eigh(G)
            self._sym_cache = (lam, V)
        return self._sym_cache

    @classmethod
    def zero(cls, dim, spec=None, kms_sqrt=None):
        z = np.zeros((dim * dim, dim * dim), dtype=complex)
        if kms_sqrt is None:
            kms_sqrt = np.full(dim * dim, 1.0 / np.sqrt(dim))
        return cls(dim, spec=spec, matrix=z, action=lambda X: np.zeros_like(X),
                   kms_sqrt=kms_sqrt, label="zero")


def _phi1(x):
    """(e^x - 1)/x with phi1(0) = 1, elementwise."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = np.abs(x) > 1e-300
    out[nz] = np.expm1(x[nz]) / x[nz]
    return out


def propagate(L, X0, t, backend="spectral"):
    """Evaluate exp(t L)[X0] for a superoperator L (Schroedinger picture).

    The spectral backend diagonalizes the Hermitized KMS symmetrization and
    is exact for detailed-balanced generators; the ode backend integrates
    the action with DOP853 at local tolerance 1e-9.
    """
    if t < 0:
        raise InvalidParameterError("t must be nonnegative")
    Xe = L.spec.to_eigenbasis(X0) if L.spec is not None else np.asarray(X0, complex)
    if backend == "spectral":
        lam, V = L.sym_eig()
        s = L.kms_sqrt
        y = vec(Xe) / s
        z = s * (V @ (np.exp(lam * t) * (dag(V) @ y)))
        out = unvec(z, L.dim)
    elif backend == "ode":
        if t == 0:
            out = Xe.copy()
        else:
            def rhs(_, y):
                return vec(L.apply_energy(unvec(y, L.dim)))
            sol = solve_ivp(rhs, (0.0, float(t)), vec(Xe), method="DOP853",
                            rtol=1e-9, atol=1e-9)
            if not sol.success:
                raise StiffnessError(f"ODE propagation failed: {sol.message}")
            out = unvec(sol.y[:, -1], L.dim)
    else:
        raise InvalidParameterError(f"unknown backend '{backend}'")
    return L.spec.from_eigenbasis(out) if L.spec is not None else out
