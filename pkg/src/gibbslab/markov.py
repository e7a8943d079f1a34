"""Entropies, quantum conditional mutual information, and decay scans.

All entropies are in natural log; conversion to bits happens only at output
formatting. Reduced states come from exact partial traces of the dense
Gibbs state (desk scale, no sampling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InvalidParameterError, InvalidRegionError
from .linalg import partial_trace
from .spinsys import as_region, graph_distance

ENTROPY_EIG_FLOOR = 1e-14


def von_neumann_entropy(rho):
    """S(rho) = -Tr rho log rho, natural log."""
    tr = float(np.trace(rho).real)
    if abs(tr - 1.0) > 1e-8:
        raise InvalidParameterError(f"state trace {tr} deviates from 1")
    ev = np.linalg.eigvalsh(rho)
    ev = ev[ev > ENTROPY_EIG_FLOOR]
    return float(-np.sum(ev * np.log(ev)))


@dataclass(frozen=True)
class Tripartition:
    A: tuple
    B: tuple
    C: tuple
    n: int

    def __post_init__(self):
        A = as_region(self.A, self.n, allow_empty=True)
        B = as_region(self.B, self.n, allow_empty=True)
        C = as_region(self.C, self.n, allow_empty=True)
        if set(A) & set(B) or set(A) & set(C) or set(B) & set(C):
            raise InvalidRegionError("tripartition regions must be disjoint")
        if set(A) | set(B) | set(C) != set(range(self.n)):
            raise InvalidRegionError("tripartition must cover all sites")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)


def qcmi(rho, part):
    """I(A:C|B) = S(AB) + S(BC) - S(B) - S(ABC)."""
    n = part.n
    S_ab = von_neumann_entropy(partial_trace(rho, part.C, n))
    S_bc = von_neumann_entropy(partial_trace(rho, part.A, n))
    S_b = von_neumann_entropy(partial_trace(rho, part.A + part.C, n))
    S_abc = von_neumann_entropy(rho)
    return S_ab + S_bc - S_b - S_abc


def cmi_recovery_bound(delta, dimC):
    """Delta log dim(C) + h2(Delta), natural log, with clamping."""
    import warnings
    if delta < 0 or delta > 1:
        warnings.warn(f"recovery error {delta} clamped into [0, 1]")
        delta = min(max(delta, 0.0), 1.0)
    if delta in (0.0, 1.0):
        h2 = 0.0
    else:
        h2 = -delta * math.log(delta) - (1 - delta) * math.log(1 - delta)
    return delta * math.log(dimC) + h2


def is_shielded(H, A, C):
    """True when no single Hamiltonian term connects A and C."""
    d = graph_distance(H, A, C)
    return d >= 2


def _loglinear_fit(x, y):
    """Least-squares fit of log(y) vs x; returns (slope, intercept, r2)."""
    x = np.asarray(x, dtype=float)
    ly = np.log(np.asarray(y, dtype=float))
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2


@dataclass
class CmiScanRow:
    dist_ac: float
    qcmi: float


@dataclass
class CmiScanResult:
    rows: list
    slope: float | None
    intercept: float | None
    r2: float | None
    fit_floor: float


def cmi_decay_scan(H, beta, a_size=1, fit_floor=1e-12, rho=None):
    """QCMI of the chain Gibbs state versus dist(A, C).

    A is the leftmost ``a_size`` sites; C shrinks from the right as B grows.
    Values below ``fit_floor`` (numerically zero) are excluded from the
    log-linear fit; the fit is skipped if fewer than two points survive.
    """
    if H.n > 12:
        raise CapacityError("cmi scan limited to n <= 12 (state-only)")
    from .linalg import gibbs, hermitian_eig
    if rho is None:
        rho = gibbs(hermitian_eig(H.to_dense()), beta).rho
    A = tuple(range(a_size))
    rows = []
    for cstart in range(a_size + 1, H.n):
        B = tuple(range(a_size, cstart))
        C = tuple(range(cstart, H.n))
        part = Tripartition(A, B, C, H.n)
        d = graph_distance(H, A, C)
        rows.append(CmiScanRow(float(d), float(qcmi(rho, part))))
    pts = [(r.dist_ac, r.qcmi) for r in rows if r.qcmi > fit_floor]
    if len(pts) >= 2:
        slope, intercept, r2 = _loglinear_fit([p[0] for p in pts],
                                              [p[1] for p in pts])
    else:
        slope = intercept = r2 = None
    return CmiScanResult(rows, slope, intercept, r2, fit_floor)
