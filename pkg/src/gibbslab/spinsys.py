"""Spin Hamiltonians: local terms, interaction graphs, patches, and jumps.

Conventions used throughout the package:
  * site 0 is the leftmost (most significant) tensor factor;
  * every term matrix is Hermitian with operator norm at most 1;
  * two terms are adjacent iff their supports intersect (self-loops allowed);
  * dist(A, B) is the minimal number of terms in a chain A ~ g1 ~ ... ~ gl ~ B,
    so a single term touching both regions gives distance 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import InvalidModelError, InvalidRegionError

HERM_TOL = 1e-12
NORM_TOL = 1e-12

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

DISCONNECTED = math.inf


def kron_all(ops):
    return reduce(np.kron, ops)


def as_region(sites, n=None, allow_empty=False):
    """Normalize a site collection to a sorted tuple, validating bounds."""
    reg = tuple(sorted(set(int(s) for s in sites)))
    if not reg and not allow_empty:
        raise InvalidRegionError("region must be nonempty")
    if reg and (reg[0] < 0 or (n is not None and reg[-1] >= n)):
        raise InvalidRegionError(f"region {reg} out of range for n={n}")
    return reg


def operator_norm(M):
    return float(np.linalg.norm(M, 2))


@dataclass(frozen=True)
class HamTerm:
    """One bounded local term, stored densely on its support."""

    support: tuple
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        sup = tuple(sorted(set(int(s) for s in self.support)))
        object.__setattr__(self, "support", sup)
        M = np.asarray(self.matrix, dtype=complex)
        if M.shape != (2 ** len(sup), 2 ** len(sup)):
            raise InvalidModelError(
                f"term '{self.label}': matrix shape {M.shape} does not match "
                f"support size {len(sup)}")
        if np.abs(M - M.conj().T).max() > HERM_TOL:
            raise InvalidModelError(f"term '{self.label}' is not Hermitian")
        if operator_norm(M) > 1.0 + NORM_TOL:
            raise InvalidModelError(f"term '{self.label}' has operator norm > 1")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    def embedded(self, n):
        """Dense embedding into the full 2^n space (site 0 = leftmost factor)."""
        from .linalg import embed
        return embed(self.matrix, self.support, n)


@dataclass(frozen=True)
class Hamiltonian:
    n: int
    terms: tuple
    _adjacency: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidModelError("n must be >= 1")
        terms = tuple(self.terms)
        for t in terms:
            if t.support and t.support[-1] >= self.n:
                raise InvalidModelError(
                    f"term '{t.label}' support {t.support} exceeds n={self.n}")
        object.__setattr__(self, "terms", terms)
        sups = [frozenset(t.support) for t in terms]
        adj = tuple(
            frozenset(j for j, s2 in enumerate(sups) if i != j and s1 & s2)
            for i, s1 in enumerate(sups))
        object.__setattr__(self, "_adjacency", adj)

    @property
    def adjacency(self):
        """Neighbor index sets, excluding the ever-present self-loop."""
        return self._adjacency

    @property
    def degree(self):
        """Interaction degree d; an isolated term still counts as degree 1."""
        if not self.terms:
            return 0
        return max(1, max(len(nb) for nb in self._adjacency))

    @property
    def dim(self):
        return 2 ** self.n

    def to_dense(self):
        H = np.zeros((self.dim, self.dim), dtype=complex)
        for t in self.terms:
            H += t.embedded(self.n)
        return H

    def terms_overlapping(self, region):
        reg = set(as_region(region, self.n))
        return [i for i, t in enumerate(self.terms) if reg & set(t.support)]

    def support_sites(self):
        """Union of all term supports."""
        out = set()
        for t in self.terms:
            out.update(t.support)
        return tuple(sorted(out))

    # -- serialization: exact float round-trip through JSON --------------

    def to_json(self):
        return json.dumps({
            "n": self.n,
            "terms": [{
                "support": list(t.support),
                "label": t.label,
                "matrix": [[z.real, z.imag] for z in t.matrix.ravel()],
            } for t in self.terms],
        })

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        terms = []
        for td in data["terms"]:
            k = len(td["support"])
            flat = np.array([complex(re, im) for re, im in td["matrix"]])
            terms.append(HamTerm(tuple(td["support"]),
                                 flat.reshape(2 ** k, 2 ** k), td["label"]))
        return cls(int(data["n"]), tuple(terms))


# -- builders -------------------------------------------------------------

def _coupling_terms(coef, unit, support, label):
    """Split a coupling with |coef| > 1 into equal unit-norm shares."""
    shares = max(1, math.ceil(abs(coef) - NORM_TOL))
    return [HamTerm(support, (coef / shares) * unit,
                    label if shares == 1 else f"{label}.{s}")
            for s in range(shares)]


def build_tfim_chain(n, J, g, periodic=False):
    """Transverse-field Ising chain J sum Z_i Z_{i+1} + g sum X_i.

    Zero-coefficient term families are dropped, so g=0 yields the classical
    Ising chain. Couplings up to |.| <= 2 are accepted; a coupling above 1
    is stored as two equal shares so every term keeps operator norm <= 1.
    """
    if n < 2:
        raise InvalidModelError("TFIM chain needs n >= 2")
    if abs(J) > 2 + NORM_TOL or abs(g) > 2 + NORM_TOL:
        raise InvalidModelError("couplings must satisfy |J| <= 2, |g| <= 2")
    terms = []
    ZZ = np.kron(PAULI["Z"], PAULI["Z"])
    bonds = n if periodic and n > 2 else n - 1
    for i in range(bonds):
        j = (i + 1) % n
        if J != 0.0:
            terms.extend(_coupling_terms(J, ZZ, (i, j), f"ZZ{i}.{j}"))
    for i in range(n):
        if g != 0.0:
            terms.extend(_coupling_terms(g, PAULI["X"], (i,), f"X{i}"))
    return Hamiltonian(n, tuple(terms))


def build_classical_ising(n, J=1.0, periodic=False):
    """Nearest-neighbour Z_i Z_{i+1} chain (commuting)."""
    return build_tfim_chain(n, J, 0.0, periodic=periodic)


def build_random_local(n, k, m, seed):
    """m random Hermitian k-local terms, each rescaled to operator norm 1."""
    if k > n:
        raise InvalidModelError(f"locality k={k} exceeds n={n}")
    if m < 1:
        raise InvalidModelError("need at least one term")
    rng = np.random.default_rng(seed)
    dim = 2 ** k
    terms = []
    for t in range(m):
        support = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
        G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        M = 0.5 * (G + G.conj().T)
        M /= operator_norm(M)
        terms.append(HamTerm(support, M, f"R{t}"))
    return Hamiltonian(n, tuple(terms))


# -- graph distance and patches ------------------------------------------

def _bfs_levels(H, region):
    """BFS level of every term: level 1 = terms overlapping the region."""
    reg = set(region)
    levels = [None] * len(H.terms)
    frontier = [i for i, t in enumerate(H.terms) if reg & set(t.support)]
    for i in frontier:
        levels[i] = 1
    lvl = 1
    while frontier:
        lvl += 1
        nxt = []
        for i in frontier:
            for j in H.adjacency[i]:
                if levels[j] is None:
                    levels[j] = lvl
                    nxt.append(j)
        frontier = nxt
    return levels


def graph_distance(H, A, B):
    """Minimal chain length A ~ g1 ~ ... ~ gl ~ B; DISCONNECTED if none."""
    A = as_region(A, H.n)
    B = as_region(B, H.n)
    levels = _bfs_levels(H, A)
    Bset = set(B)
    best = DISCONNECTED
    for i, t in enumerate(H.terms):
        if levels[i] is not None and Bset & set(t.support):
            best = min(best, levels[i])
    return best


def term_distance(H, term_index, A):
    """dist(g, A) treating the term's support as a region."""
    return graph_distance(H, H.terms[term_index].support, A)


def region_restricted(H, A, ell):
    """Terms supported inside the site neighbourhood of A of radius ell.

    The neighbourhood collects every site within term-chain distance ell of
    A; only terms entirely inside it survive. This is the enlarged-region
    restriction used by the patch-sweep preparation (contrast with
    `truncate_patch`, which keeps whole terms by their own distance).
    """
    A = as_region(A, H.n)
    sites = set(A)
    for i in range(H.n):
        if i not in sites and graph_distance(H, A, (i,)) <= ell:
            sites.add(i)
    keep = tuple(t for t in H.terms if set(t.support) <= sites)
    return Hamiltonian(H.n, keep)


def truncate_patch(H, A, ell):
    """Sub-Hamiltonian of terms with dist(g, A) < ell - 1, plus everything
    overlapping A; acts on the same n sites."""
    if ell < 1:
        raise InvalidModelError("patch radius ell must be >= 1")
    A = as_region(A, H.n)
    Aset = set(A)
    keep = []
    for i, t in enumerate(H.terms):
        if Aset & set(t.support):
            keep.append(t)
            continue
        d = term_distance(H, i, A)
        if d < ell - 1:
            keep.append(t)
    return Hamiltonian(H.n, tuple(keep))


# -- jumps ---------------------------------------------------------------

@dataclass(frozen=True)
class Jump:
    label: str
    support: tuple
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(sorted(self.support)))
        M = np.asarray(self.matrix, dtype=complex)
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    def embedded(self, n):
        from .linalg import embed
        return embed(self.matrix, self.support, n)


@dataclass(frozen=True)
class JumpSet:
    jumps: tuple

    def __post_init__(self):
        object.__setattr__(self, "jumps", tuple(self.jumps))

    def __iter__(self):
        return iter(self.jumps)

    def __len__(self):
        return len(self.jumps)

    def support_sites(self):
        out = set()
        for j in self.jumps:
            out.update(j.support)
        return tuple(sorted(out))


def single_site_jumps(A):
    """The 3|A| single-qubit Pauli jumps {X_i, Y_i, Z_i} on region A."""
    A = as_region(A)
    jumps = []
    for i in A:
        for p in ("X", "Y", "Z"):
            jumps.append(Jump(f"{p}{i}", (i,), PAULI[p]))
    return JumpSet(tuple(jumps))
