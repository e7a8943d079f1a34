"""Time-averaged recovery maps and discard/recover experiments.

R_{A,t} = (1/t) int_0^t exp(s L_A) ds is evaluated spectrally: with
phi(x) = (e^x - 1)/x applied to the eigenvalues of the Hermitized KMS
symmetrization, R_t = Gamma_1/4 phi(G t) Gamma_-1/4. The quadrature (ode)
backend averages propagated states over Gauss-Legendre nodes in s and is
the scalable cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import CapacityError, InvalidParameterError
from .linalg import (SuperOp, _phi1, dag, insert_maximally_mixed, op_norm,
                     partial_trace, trace_distance, unvec, vec)
from .lindblad import Weight, build_generator
from .spinsys import Hamiltonian, as_region, single_site_jumps, truncate_patch


def discard_region(gs, A):
    """rho_{beta,-A} = Tr_A[rho_beta] (x) tau_A with site order restored."""
    n = int(round(math.log2(gs.dim)))
    A = as_region(A, n, allow_empty=True)
    if not A:
        return gs.rho.copy()
    rest = partial_trace(gs.rho, A, n)
    return insert_maximally_mixed(rest, A, n)


def discard_state(rho, A, n):
    A = as_region(A, n, allow_empty=True)
    if not A:
        return rho.copy()
    return insert_maximally_mixed(partial_trace(rho, A, n), A, n)


def time_averaged_map(gen, t, backend="spectral", nodes=32):
    """R_t as a SuperOp on the generator's own system.

    spectral: phi(lambda t) on the symmetrized spectrum (exact);
    ode: Gauss-Legendre average over s in [0, t] of propagated inputs; the
    action checks node doubling and warns when the change exceeds 1e-6.
    """
    if t <= 0:
        raise InvalidParameterError("time-averaged map needs t > 0")
    if backend == "spectral":
        lam, V = gen.sym_eig()
        s = gen.full.kms_sqrt
        fv = _phi1(lam * t)
        W = s[:, None] * (V * fv) @ dag(V) / s[None, :]
        return SuperOp(gen.dim, spec=gen.spec, matrix=W, kms_sqrt=s,
                       label=f"time-avg t={t}")
    if backend == "ode":
        import warnings

        from .errors import QuadratureWarning
        from .linalg import propagate

        def average(Xe, n_nodes):
            xq, wq = leggauss(n_nodes)
            out = np.zeros_like(Xe, dtype=complex)
            base = gen.spec.from_eigenbasis(Xe)
            for x, wv in zip(xq, wq):   # weights of (1/t) int_0^t
                out += 0.5 * wv * gen.spec.to_eigenbasis(
                    propagate(gen.full, base, 0.5 * t * (x + 1.0), backend="ode"))
            return out

        def action(Xe):
            coarse = average(Xe, nodes)
            fine = average(Xe, 2 * nodes)
            change = np.abs(fine - coarse).max()
            if change > 1e-6 * max(np.abs(fine).max(), 1e-30):
                warnings.warn(f"time-average quadrature doubling change {change:.2e}",
                              QuadratureWarning)
            return fine

        return SuperOp(gen.dim, spec=gen.spec, matrix=None, action=action,
                       kms_sqrt=gen.full.kms_sqrt, label=f"time-avg-ode t={t}")
    raise InvalidParameterError(f"unknown backend '{backend}'")


def heisenberg_time_avg(gen, X, t):
    """R_t^dag[X] evaluated spectrally (computational basis in and out)."""
    lam, V = gen.sym_eig()
    s = gen.full.kms_sqrt
    Xe = gen.spec.to_eigenbasis(np.asarray(X, dtype=complex))
    y = s * vec(Xe)
    z = (V @ (_phi1(lam * t) * (dag(V) @ y))) / s
    return gen.spec.from_eigenbasis(unvec(z, gen.dim))


@dataclass
class RecoveryScenario:
    H: Hamiltonian
    beta: float
    sigma: float
    A: tuple
    times: tuple
    ell: int | None = None
    backend: str = "spectral"
    weight_kind: str = "metropolis"
    omega_gamma: float | None = None

    def __post_init__(self):
        self.A = as_region(self.A, self.H.n, allow_empty=True)
        times = tuple(float(t) for t in self.times)
        if any(t <= 0 for t in times) or list(times) != sorted(set(times)):
            raise InvalidParameterError("times must be positive and strictly increasing")
        self.times = times
        if self.ell is not None and self.ell < 1:
            raise InvalidParameterError("ell must be >= 1 when present")

    def weight(self):
        if self.weight_kind == "metropolis":
            return Weight.metropolis(self.beta, self.sigma)
        return Weight.gaussian(self.beta, self.sigma, self.omega_gamma)


@dataclass
class RecoveryRow:
    t: float
    ell: int | None
    err: float
    dirichlet: float
    bound_2_over_t: float


def _scenario_generator(s, ell=None):
    from .spinsys import JumpSet
    H = s.H if ell is None else truncate_patch(s.H, s.A, ell)
    jumps = single_site_jumps(s.A) if s.A else JumpSet(())
    return build_generator(H, s.weight(), jumps)


def _spectral_recover(eg, rho_in, t):
    lam, _ = eg.gen.sym_eig()
    return eg.spectral_apply_full(rho_in, _phi1(lam * t))


def dirichlet_full(eg, Y):
    """-Re <Y, L^dag Y>_rho for a full-system operator Y, where rho is the
    generator's fixed point gibbs(H_active) x tau_rest."""
    Yb = eg._to_batch(Y)
    Ld = dag(eg.gen.full.matrix)
    w = eg.gen.full.kms_sqrt ** 2
    vals = -np.sum(Yb.conj() * (Ld @ Yb) * w[:, None], axis=0).real
    n_rest = eg.n - eg.n_active
    return float(vals.sum() / 2 ** n_rest)


def heisenberg_time_avg_full(eg, X, t):
    """R_t^dag[X] on the full system."""
    lam, _ = eg.gen.sym_eig()
    return eg.heisenberg_spectral_apply(X, _phi1(lam * t))


def stationarity_defect_full(eg, X, t):
    """||L^dag R_t^dag[X]|| on the full system (operator norm)."""
    lam, _ = eg.gen.sym_eig()
    fv = np.expm1(lam * t) / t
    return op_norm(eg.heisenberg_spectral_apply(X, fv))


def recovery_error_curve(scenario, gs_full=None, x_probe=None, seed=7):
    """err(t) = ||R_{A,t}[rho_{beta,-A}] - rho_beta||_1 plus the Dirichlet
    diagnostics E_A(R_t^dag[X]) for a fixed random contraction."""
    from .linalg import gibbs, hermitian_eig
    s = scenario
    if s.H.n > 6:
        raise CapacityError("dense recovery curve limited to n <= 6")
    eg = _scenario_generator(s)
    if gs_full is None:
        gs_full = gibbs(hermitian_eig(s.H.to_dense()), s.beta)
    rho_beta = gs_full.rho
    rho_in = discard_state(rho_beta, s.A, s.H.n)
    if x_probe is None:
        rng = np.random.default_rng(seed)
        G = rng.normal(size=(2 ** s.H.n,) * 2) + 1j * rng.normal(size=(2 ** s.H.n,) * 2)
        x_probe = (G + dag(G)) / 2
        x_probe /= op_norm(x_probe)
    use_ode = s.backend == "ode"
    if use_ode and eg.n_active != s.H.n:
        raise InvalidParameterError("ode backend needs the generator on all sites")
    rows = []
    for t in s.times:
        if use_ode:
            rec = time_averaged_map(eg.gen, t, backend="ode").apply(rho_in)
        else:
            rec = _spectral_recover(eg, rho_in, t)
        err = trace_distance(rec, rho_beta)
        xt = heisenberg_time_avg_full(eg, x_probe, t)
        dval = dirichlet_full(eg, xt)
        rows.append(RecoveryRow(t, None, float(err), float(dval), 2.0 / t))
    return rows


def truncated_recovery_error(scenario, gs_full=None):
    """Full vs truncated recovery at each time; map_gap compares the two maps
    on the discarded state."""
    from .linalg import gibbs, hermitian_eig
    s = scenario
    if s.ell is None:
        raise InvalidParameterError("scenario needs a truncation radius ell")
    if gs_full is None:
        gs_full = gibbs(hermitian_eig(s.H.to_dense()), s.beta)
    rho_beta = gs_full.rho
    rho_in = discard_state(rho_beta, s.A, s.H.n)
    eg_full = _scenario_generator(s)
    eg_trunc = _scenario_generator(s, ell=s.ell)
    rows = []
    for t in s.times:
        rec_full = _spectral_recover(eg_full, rho_in, t)
        rec_trunc = _spectral_recover(eg_trunc, rho_in, t)
        rows.append({
            "t": t,
            "ell": s.ell,
            "err_full": trace_distance(rec_full, rho_beta),
            "err_trunc": trace_distance(rec_trunc, rho_beta),
            "map_gap": trace_distance(rec_full, rec_trunc),
        })
    return rows


def patching_prepare(H, beta, sigma, patch_size, ell, t, discard=False,
                     weight_kind="metropolis", rho_target=None):
    """Sweep contiguous patches left to right, applying recovery maps built
    from region-restricted Hamiltonians to the maximally mixed initial
    state; returns (state, err).

    Each patch map is the sampler of the Hamiltonian restricted to the
    sites within distance ``ell`` of the patch, with jumps on the patch.
    With ``discard`` the patch is traced out and replaced by the maximally
    mixed state before each recovery (the trace-out-and-recover composite);
    the default applies the recovery maps alone, which coincides on the
    maximally mixed start.
    """
    from .linalg import gibbs, hermitian_eig
    from .spinsys import region_restricted
    if H.n > 8:
        raise CapacityError("patching experiment limited to n <= 8")
    if rho_target is None:
        rho_target = gibbs(hermitian_eig(H.to_dense()), beta).rho
    w = (Weight.metropolis(beta, sigma) if weight_kind == "metropolis"
         else Weight.gaussian(beta, sigma))
    state = np.eye(2 ** H.n, dtype=complex) / 2 ** H.n
    patches = [tuple(range(i, min(i + patch_size, H.n)))
               for i in range(0, H.n, patch_size)]
    for A in patches:
        Hl = region_restricted(H, A, ell)
        eg = build_generator(Hl, w, single_site_jumps(A))
        if discard:
            state = discard_state(state, A, H.n)
        lam, _ = eg.gen.sym_eig()
        state = eg.spectral_apply_full(state, _phi1(lam * t))
    return state, float(trace_distance(state, rho_target))
