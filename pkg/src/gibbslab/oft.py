"""Bohr decomposition and the Gaussian-weighted operator Fourier transform.

The frequency window is ``fhat(w) = exp(-w^2/4 sigma^2)/sqrt(sigma sqrt(2 pi))``
with time-domain partner ``f(t) = exp(-sigma^2 t^2) sqrt(sigma sqrt(2/pi))``.
All omega integrals of transformed operators reduce to analytic Gaussian
integrals over the finite Bohr sum; no omega quadrature happens here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .linalg import op_norm

EXP_GUARD = 700.0


@dataclass(frozen=True)
class OftParams:
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise InvalidParameterError("sigma must be positive")


def fhat(omega, sigma):
    return np.exp(-np.asarray(omega) ** 2 / (4.0 * sigma ** 2)) / np.sqrt(sigma * np.sqrt(2 * np.pi))


def f_time(t, sigma):
    return np.exp(-sigma ** 2 * np.asarray(t) ** 2) * np.sqrt(sigma * np.sqrt(2.0 / np.pi))


@dataclass
class BohrDecomp:
    """Energy-change decomposition A = sum_nu A_nu.

    ``At`` is the operator in the energy eigenbasis; components are masked
    slices of it keyed by the deduplicated Bohr grid of the spectrum.
    """

    spec: Spectrum
    At: np.ndarray

    @property
    def nu_list(self):
        return self.spec.bohr

    def component_energy(self, nu_index):
        return np.where(self.spec.bohr_index == nu_index, self.At, 0.0)

    def component(self, nu_index):
        return self.spec.from_eigenbasis(self.component_energy(nu_index))

    @property
    def components(self):
        return {float(self.spec.bohr[k]): self.component(k)
                for k in np.unique(self.spec.bohr_index)}

    def weighted_energy(self, weights):
        """sum_nu weights[nu_bin] * A_nu, in the energy eigenbasis."""
        return np.asarray(weights)[self.spec.bohr_index] * self.At


def bohr_decompose(spec, A):
    if A.shape != (spec.dim, spec.dim):
        raise InvalidParameterError("operator dimension does not match spectrum")
    return BohrDecomp(spec, spec.to_eigenbasis(A))


def oft(bd, omega, p, window=None):
    """Gaussian-windowed frequency component, exact finite Bohr sum.

    ``window`` optionally drops Bohr contributions with |omega - nu| beyond
    the given truncation radius.
    """
    w = fhat(omega - bd.nu_list, p.sigma)
    if window is not None:
        w = np.where(np.abs(omega - bd.nu_list) <= window, w, 0.0)
    return bd.spec.from_eigenbasis(bd.weighted_energy(w))


def oft_energy(bd, omega, p, window=None):
    w = fhat(omega - bd.nu_list, p.sigma)
    if window is not None:
        w = np.where(np.abs(omega - bd.nu_list) <= window, w, 0.0)
    return bd.weighted_energy(w)


def oft_heisenberg(bd, omega, t, p):
    """Heisenberg-evolved transform: sum_nu A_nu e^{i nu t} fhat(omega - nu)."""
    w = fhat(omega - bd.nu_list, p.sigma) * np.exp(1j * bd.nu_list * t)
    return bd.spec.from_eigenbasis(bd.weighted_energy(w))


def reconstruct(bd, p):
    """Analytic omega-integral (2 sigma sqrt(2 pi))^{-1/2} int oft domega.

    Each component integrates to 2 sigma sqrt(pi) / sqrt(sigma sqrt(2 pi)),
    so the result reproduces the original operator exactly.
    """
    per_comp = 2.0 * p.sigma * np.sqrt(np.pi) / np.sqrt(p.sigma * np.sqrt(2 * np.pi))
    scale = per_comp / np.sqrt(2.0 * p.sigma * np.sqrt(2 * np.pi))
    return bd.spec.from_eigenbasis(scale * bd.At)


def conjugate_imaginary(spec, bd, omega, beta, p):
    """Both sides of the imaginary-time conjugation shift identity.

    lhs: e^{beta H} oft(omega) e^{-beta H}, evaluated entrywise in the
    eigenbasis; rhs: e^{beta omega + sigma^2 beta^2} oft(omega + 2 sigma^2 beta).
    When the shift exponent exceeds the double-precision range both sides
    are returned rescaled by the same factor.
    """
    expo = beta * omega + p.sigma ** 2 * beta ** 2
    logscale = expo - (EXP_GUARD - 10.0) if expo > EXP_GUARD - 10.0 else 0.0
    E = spec.evals
    conj = np.exp(beta * (E[:, None] - E[None, :]) - logscale)
    lhs = spec.from_eigenbasis(conj * oft_energy(bd, omega, p))
    rhs = np.exp(expo - logscale) * oft(bd, omega + 2.0 * p.sigma ** 2 * beta, p)
    return lhs, rhs


def conjugation_norm(spec, A, beta):
    """Exact operator norm of e^{beta H} A e^{-beta H}."""
    E = spec.evals
    At = spec.to_eigenbasis(A)
    conj = np.exp(beta * (E[:, None] - E[None, :])) * At
    return op_norm(conj)
