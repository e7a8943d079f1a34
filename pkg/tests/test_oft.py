import numpy as np
import pytest

from conftest import random_hermitian
from gibbslab import linalg, oft, spinsys
from gibbslab.linalg import hermitian_eig, op_norm
from gibbslab.oft import (OftParams, bohr_decompose, conjugate_imaginary,
                          conjugation_norm, fhat, oft as oft_eval,
                          oft_heisenberg, reconstruct)
from gibbslab.spinsys import PAULI


@pytest.fixture(scope="module")
def zspec():
    return hermitian_eig(PAULI["Z"])


class TestBohrDecomposition:
    def test_one_qubit_ladder(self, zspec):
        bd = bohr_decompose(zspec, PAULI["X"])
        comps = bd.components
        # convention Z|0> = |0>: the +2 component is |0><1|
        assert np.allclose(comps[2.0], [[0, 1], [0, 0]])
        assert np.allclose(comps[-2.0], [[0, 0], [1, 0]])

    def test_function_of_h_is_static(self, rng):
        spec = hermitian_eig(random_hermitian(rng, 8))
        fH = spec.from_eigenbasis(np.diag(spec.evals ** 2 + 0.3 * spec.evals))
        bd = bohr_decompose(spec, fH)
        for nu, comp in bd.components.items():
            if nu != 0.0:
                assert np.abs(comp).max() < 1e-12

    def test_completeness(self, rng, tfim3):
        _, spec = tfim3
        A = linalg.embed(PAULI["X"], (0,), 3)
        bd = bohr_decompose(spec, A)
        assert np.abs(sum(bd.components.values()) - A).max() <= 1e-12

    def test_adjoint_symmetry(self, rng):
        spec = hermitian_eig(random_hermitian(rng, 8))
        A = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        bd = bohr_decompose(spec, A)
        bdd = bohr_decompose(spec, A.conj().T)
        for nu, comp in bd.components.items():
            assert np.abs(comp.conj().T - bdd.components[-nu]).max() <= 1e-10


class TestTransform:
    def test_isolated_peak(self, zspec):
        p = OftParams(0.1)
        bd = bohr_decompose(zspec, PAULI["X"])
        A2 = bd.components[2.0]
        got = oft_eval(bd, 2.0, p)
        expect = A2 / np.sqrt(p.sigma * np.sqrt(2 * np.pi))
        assert np.abs(got - expect).max() <= 1e-6 * np.abs(expect).max()

    def test_identity_operator(self, zspec):
        p = OftParams(0.7)
        bd = bohr_decompose(zspec, np.eye(2, dtype=complex))
        for w in (0.0, 1.3, -2.2):
            assert np.allclose(oft_eval(bd, w, p), np.eye(2) * fhat(w, p.sigma))

    def test_window_mask(self, zspec):
        p = OftParams(1.0)
        bd = bohr_decompose(zspec, PAULI["X"])
        masked = oft_eval(bd, 2.0, p, window=1.0)   # only |2 - nu| <= 1 survives
        expect = bd.components[2.0] * fhat(0.0, p.sigma)
        assert np.allclose(masked, expect)

    def test_reconstruction_random(self, rng):
        # analytic omega-integral reproduces the operator (50 instances)
        for i in range(50):
            dim = int(rng.choice([2, 4, 8]))
            spec = hermitian_eig(random_hermitian(rng, dim))
            A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            bd = bohr_decompose(spec, A)
            p = OftParams(float(rng.uniform(0.3, 2.0)))
            rec = reconstruct(bd, p)
            assert np.abs(rec - A).max() <= 1e-10 * np.abs(A).max()


class TestHeisenberg:
    def test_t_zero(self, rng, tfim3):
        _, spec = tfim3
        A = linalg.embed(PAULI["Y"], (1,), 3)
        bd = bohr_decompose(spec, A)
        p = OftParams(1.0)
        assert np.allclose(oft_heisenberg(bd, 0.7, 0.0, p), oft_eval(bd, 0.7, p))

    def test_static_for_function_of_h(self, rng):
        spec = hermitian_eig(random_hermitian(rng, 4))
        fH = spec.from_eigenbasis(np.diag(np.cos(spec.evals)))
        bd = bohr_decompose(spec, fH)
        p = OftParams(0.9)
        assert np.allclose(oft_heisenberg(bd, 0.3, 2.1, p),
                           oft_heisenberg(bd, 0.3, 0.0, p))

    def test_one_qubit_phases(self, zspec):
        p = OftParams(1.0)
        bd = bohr_decompose(zspec, PAULI["X"])
        t = np.pi
        got = oft_heisenberg(bd, 2.0, t, p)
        expect = (bd.components[2.0] * np.exp(2j * t) * fhat(0.0, 1.0)
                  + bd.components[-2.0] * np.exp(-2j * t) * fhat(4.0, 1.0))
        assert np.abs(got - expect).max() <= 1e-12


class TestImaginaryConjugation:
    def test_beta_zero(self, zspec):
        bd = bohr_decompose(zspec, PAULI["X"])
        p = OftParams(1.0)
        lhs, rhs = conjugate_imaginary(zspec, bd, 0.8, 0.0, p)
        assert np.allclose(lhs, rhs)
        assert np.allclose(lhs, oft_eval(bd, 0.8, p))

    def test_one_qubit_shift(self, zspec):
        bd = bohr_decompose(zspec, PAULI["X"])
        p = OftParams(1.0)
        lhs, rhs = conjugate_imaginary(zspec, bd, 0.0, 1.0, p)
        assert np.abs(lhs - rhs).max() <= 1e-10

    def test_shift_identity_random(self, rng):
        # entrywise relative 1e-9 over 50 random instances
        for _ in range(50):
            dim = int(rng.choice([2, 4, 8]))
            spec = hermitian_eig(random_hermitian(rng, dim))
            A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            A /= op_norm(A)
            bd = bohr_decompose(spec, A)
            p = OftParams(float(rng.uniform(0.4, 1.6)))
            omega = float(rng.uniform(-2, 2))
            beta = float(rng.uniform(0.1, 2.0))
            lhs, rhs = conjugate_imaginary(spec, bd, omega, beta, p)
            scale = max(np.abs(rhs).max(), 1e-300)
            assert np.abs(lhs - rhs).max() <= 1e-9 * scale

    def test_conjugation_norm_bound(self, rng):
        # ||e^{bH} oft(w) e^{-bH}|| <= e^{bw} e^{s^2 b^2} / sqrt(s sqrt(2pi)),
        # 30 random instances
        for _ in range(30):
            dim = int(rng.choice([4, 8]))
            spec = hermitian_eig(random_hermitian(rng, dim))
            A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            A /= op_norm(A)
            bd = bohr_decompose(spec, A)
            sigma = float(rng.uniform(0.4, 1.5))
            p = OftParams(sigma)
            omega = float(rng.uniform(-3, 3))
            beta = float(rng.uniform(0.1, 1.5))
            lhs, _ = conjugate_imaginary(spec, bd, omega, beta, p)
            bound = (np.exp(beta * omega + sigma ** 2 * beta ** 2)
                     / np.sqrt(sigma * np.sqrt(2 * np.pi)))
            assert op_norm(lhs) <= bound * (1 + 1e-10)

    def test_norm_decay(self, rng):
        # ||oft(w)|| <= e^{-bw + s^2 b^2} (s sqrt(2pi))^{-1/2} ||e^{bH} A e^{-bH}||
        for _ in range(30):
            spec = hermitian_eig(random_hermitian(rng, 8))
            A = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
            A /= op_norm(A)
            bd = bohr_decompose(spec, A)
            sigma = float(rng.uniform(0.4, 1.5))
            p = OftParams(sigma)
            omega = float(rng.uniform(-3, 3))
            beta = float(rng.uniform(-1.0, 1.0))
            lhs = op_norm(oft_eval(bd, omega, p))
            bound = (np.exp(-beta * omega + sigma ** 2 * beta ** 2)
                     / np.sqrt(sigma * np.sqrt(2 * np.pi))
                     * conjugation_norm(spec, A, beta))
            assert lhs <= bound * (1 + 1e-10)

    def test_conjugation_norm_beta_zero(self, rng):
        spec = hermitian_eig(random_hermitian(rng, 4))
        A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        assert abs(conjugation_norm(spec, A, 0.0) - op_norm(A)) <= 1e-12
