"""Three independent representations of the Dirichlet form.

direct:     E(X) = -Re <X, L^dag X>_rho with the assembled generator;
bilinear:   exact finite sum over deduplicated Bohr pairs with coefficients
            abar = h / (2 cosh(beta(nu1 - nu2)/4)), h = alpha e^{beta(nu1+nu2)/4};
quadrature: tensor Gauss-Legendre of g(t) h(w) ||[Ahat(w, t), X]||_rho^2 with
            g(t) = 1/(beta cosh(2 pi t / beta)) and h(w) the weight-specific
            frequency envelope.

The three must agree; the quadrature carries a node-doubling error estimate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from .errors import CapacityError, InvalidParameterError, QuadratureWarning
from .linalg import dag, unvec, vec
from .oft import fhat


@dataclass
class DirichletKernels:
    """Time/frequency kernels and the quadrature layout."""

    weight: object                 # lindblad.Weight
    t_max: float
    omega_max: float
    nodes_t: int = 64
    nodes_omega: int = 64

    @classmethod
    def for_model(cls, weight, hnorm, nodes_t=64, nodes_omega=64):
        return cls(weight, t_max=3.0 * weight.beta,
                   omega_max=2.0 * hnorm + 20.0 * weight.sigma,
                   nodes_t=nodes_t, nodes_omega=nodes_omega)

    def g(self, t):
        b = self.weight.beta
        return 1.0 / (b * np.cosh(2.0 * np.pi * np.asarray(t) / b))

    def h(self, w):
        wt = self.weight
        w = np.asarray(w, dtype=float)
        if wt.kind == "metropolis":
            return (np.exp(-wt.sigma ** 2 * wt.beta ** 2 / 8.0)
                    * np.exp(-np.abs(w) * wt.beta / 2.0))
        return (np.exp(-wt.beta * wt.omega_gamma / 4.0)
                * np.exp(-w ** 2 / (2.0 * wt.sigma_gamma ** 2)))


def _kms_weight(gs):
    sp = np.sqrt(gs.probs)
    return np.outer(sp, sp)


def dirichlet_direct(gen, gs, X):
    """-Re <X, L^dag X>_rho for the assembled generator (dense form)."""
    if gen.full.matrix is None:
        raise CapacityError("direct Dirichlet form needs the dense generator")
    spec = gen.spec
    Xe = spec.to_eigenbasis(np.asarray(X, dtype=complex))
    LdX = unvec(dag(gen.full.matrix) @ vec(Xe), gen.dim)
    w = _kms_weight(gs)
    val = -np.sum(Xe.conj() * LdX * w)
    return float(val.real)


def heisenberg_apply(gen, X):
    """L^dag[X] in the computational basis (dense form)."""
    if gen.full.matrix is None:
        raise CapacityError("Heisenberg application needs the dense generator")
    spec = gen.spec
    Xe = spec.to_eigenbasis(np.asarray(X, dtype=complex))
    return spec.from_eigenbasis(unvec(dag(gen.full.matrix) @ vec(Xe), gen.dim))


def abar_table(tc):
    """abar(nu1, nu2) = alpha e^{beta(nu1+nu2)/4} / (2 cosh(beta(nu1-nu2)/4))."""
    beta = tc.weight.beta
    nu = tc.bohr
    h = tc.table * np.exp(beta * (nu[:, None] + nu[None, :]) / 4.0)
    return h / (2.0 * np.cosh(beta * (nu[:, None] - nu[None, :]) / 4.0))


def dirichlet_bilinear(spec, gs, jump_ops, tc, X, Y):
    """Exact Bohr-pair bilinear representation; jump_ops are full matrices."""
    beta = tc.weight.beta
    if abs(beta - gs.beta) > 1e-12:
        raise InvalidParameterError("weight and state disagree on beta")
    abar = abar_table(tc)
    w = _kms_weight(gs)
    sw = np.sqrt(w)
    Xe = spec.to_eigenbasis(np.asarray(X, dtype=complex))
    Ye = spec.to_eigenbasis(np.asarray(Y, dtype=complex))
    nb = tc.bohr.size
    total = 0.0 + 0.0j
    for A in jump_ops:
        At = spec.to_eigenbasis(np.asarray(A, dtype=complex))
        bins = np.unique(spec.bohr_index)
        CX = np.zeros((nb, spec.dim * spec.dim), dtype=complex)
        CY = np.zeros_like(CX)
        for m in bins:
            Anu = np.where(spec.bohr_index == m, At, 0.0)
            CX[m] = ((Anu @ Xe - Xe @ Anu) * sw).ravel()
            CY[m] = ((Anu @ Ye - Ye @ Anu) * sw).ravel()
        gram = CX.conj() @ CY.T
        total += np.sum(abar * gram)
    return complex(total)


@dataclass
class QuadResult:
    value: float
    error: float
    converged: bool


def _commutator_norm_sq_nodes(spec, gs, jump_ops, kernels, X, nt, nw):
    """Tensor-product quadrature of g(t) h(w) ||[Ahat(w,t), X]||_rho^2.

    The frequency axis is panelled at w = 0 where the Metropolis envelope
    h(w) = e^{-beta|w|/2} has a kink.
    """
    xt, wt_ = leggauss(nt)
    xw, ww_ = leggauss(nw)
    ts = kernels.t_max * xt
    wts = kernels.t_max * wt_
    half = 0.5 * kernels.omega_max
    oms = np.concatenate([half * xw - half, half * xw + half])
    wws = np.concatenate([half * ww_, half * ww_])
    w = _kms_weight(gs)
    sigma = kernels.weight.sigma
    E = spec.evals
    dE = E[:, None] - E[None, :]
    Xe = spec.to_eigenbasis(np.asarray(X, dtype=complex))
    gvals = kernels.g(ts) * wts
    hvals = kernels.h(oms) * wws
    total = 0.0
    for A in jump_ops:
        At = spec.to_eigenbasis(np.asarray(A, dtype=complex))
        for qt in range(ts.size):
            phase = np.exp(1j * dE * ts[qt]) * At
            for qw in range(oms.size):
                Aw = fhat(oms[qw] - dE, sigma) * phase
                C = Aw @ Xe - Xe @ Aw
                nrm2 = float(np.sum(np.abs(C) ** 2 * w))
                total += gvals[qt] * hvals[qw] * nrm2
    return total


def dirichlet_commutator_integral(spec, gs, jump_ops, kernels, X):
    """Quadrature representation with a node-doubling error estimate."""
    coarse = _commutator_norm_sq_nodes(spec, gs, jump_ops, kernels, X,
                                       kernels.nodes_t, kernels.nodes_omega)
    fine = _commutator_norm_sq_nodes(spec, gs, jump_ops, kernels, X,
                                     2 * kernels.nodes_t, 2 * kernels.nodes_omega)
    err = abs(fine - coarse)
    converged = err <= 1e-6 * max(abs(fine), 1e-30)
    if not converged:
        warnings.warn(
            f"Dirichlet quadrature not converged: doubling change {err:.3e}",
            QuadratureWarning)
    return QuadResult(float(fine), float(err), converged)


# -- kernel identities --------------------------------------------------------

def metropolis_h_xintegral(nu1, nu2, beta, sigma):
    """x-integral form of h(nu1, nu2) for the Metropolis weight (oracle)."""
    s = nu1 + nu2

    def integrand(x):
        return 0.5 * math.sqrt(beta / (math.pi * x)) * math.exp(
            -beta * s * s / (16.0 * x) - beta * x / 4.0)

    lo = beta * sigma ** 2 / 2.0
    val, _ = quad(integrand, lo, np.inf, limit=400, epsabs=1e-13, epsrel=1e-12)
    return val * math.exp(-(nu1 - nu2) ** 2 / (8.0 * sigma ** 2))


def metropolis_h_omega_xintegral(omega, beta, sigma):
    """x-integral (Gaussian-mixture) form of the frequency envelope h(omega)."""
    def integrand(x):
        sg2 = 2.0 * x / beta - sigma ** 2
        return (math.exp(-beta * x / 4.0 - omega * omega / (2.0 * sg2))
                / math.sqrt(2.0 * math.pi * sg2))

    lo = beta * sigma ** 2 / 2.0
    val, _ = quad(integrand, lo, np.inf, limit=500, epsabs=1e-13, epsrel=1e-12)
    return val


def cosh_time_integral(nu, beta):
    """Quadrature of int g(t) e^{-i nu t} dt, which must equal sech(beta nu/4)/2."""
    def integrand(t):
        return math.cos(nu * t) / (beta * math.cosh(2.0 * math.pi * t / beta))

    cutoff = 6.0 * beta
    val, _ = quad(integrand, -cutoff, cutoff, limit=400, epsabs=1e-13, epsrel=1e-12)
    return val


def metropolis_kernel_identity(betas=(0.5, 1.0, 2.0, 4.0, 0.2), n_omega=20,
                               tol=1e-8):
    """Validate the closed-form kernels against their integral definitions.

    Checks, on a grid of (omega, beta) with sigma = 1/beta:
      * h(omega) = e^{-sigma^2 beta^2/8} e^{-|omega| beta/2} against the
        Gaussian-mixture x-integral;
      * 1/(2 cosh(beta nu/4)) against the time integral of g;
      * the analytic value 1/2 of the g integral.
    """
    from .lindblad import Weight
    max_h = 0.0
    max_cosh = 0.0
    max_g = 0.0
    for beta in betas:
        sigma = 1.0 / beta
        k = DirichletKernels(Weight.metropolis(beta, sigma), 3.0 * beta, 1.0)
        for omega in np.linspace(0.0, 8.0 / beta, n_omega):
            closed = float(k.h(omega))
            orac = metropolis_h_omega_xintegral(float(omega), beta, sigma)
            max_h = max(max_h, abs(closed - orac))
        for nu in np.linspace(0.0, 6.0 / beta, 7):
            closed = 0.5 / math.cosh(beta * nu / 4.0)
            max_cosh = max(max_cosh, abs(closed - cosh_time_integral(float(nu), beta)))
        gint, _ = quad(lambda t: float(k.g(t)), -8 * beta, 8 * beta, limit=300)
        max_g = max(max_g, abs(gint - 0.5))
    return {"max_err_h": max_h, "max_err_cosh": max_cosh,
            "max_err_g_integral": max_g,
            "pass": bool(max_h <= tol and max_cosh <= tol and max_g <= tol)}
