import numpy as np
import pytest

from conftest import random_hermitian, random_state
from gibbslab import linalg, spinsys
from gibbslab.errors import (InvalidParameterError, NumericDomainError)
from gibbslab.linalg import (SuperOp, choi_matrix, embed, gibbs, hermitian_eig,
                             insert_maximally_mixed, kms_inner, kms_norm,
                             partial_trace, propagate, super_sandwich,
                             trace_distance, vec)
from gibbslab.spinsys import PAULI


class TestEmbedding:
    def test_site_zero_is_most_significant(self):
        assert np.allclose(embed(PAULI["Z"], (0,), 2), np.kron(PAULI["Z"], np.eye(2)))
        assert np.allclose(embed(PAULI["Z"], (1,), 2), np.kron(np.eye(2), PAULI["Z"]))

    def test_two_site_noncontiguous(self):
        ZX = np.kron(PAULI["Z"], PAULI["X"])
        expect = np.kron(np.kron(PAULI["Z"], np.eye(2)), PAULI["X"])
        assert np.allclose(embed(ZX, (0, 2), 3), expect)

    def test_embedding_roundtrip_partial_trace(self, rng):
        op = random_hermitian(rng, 4)
        full = embed(op, (1, 2), 3)
        back = partial_trace(full, (0,), 3) / 2
        assert np.allclose(back, op)


class TestPartialTrace:
    def test_product_state(self, rng):
        a = random_state(rng, 2)
        b = random_state(rng, 4)
        rho = np.kron(a, b)
        assert np.allclose(partial_trace(rho, (0,), 3), b)
        assert np.allclose(partial_trace(rho, (1, 2), 3), a)

    def test_bell_state(self):
        v = np.zeros(4)
        v[0] = v[3] = 1 / np.sqrt(2)
        rho = np.outer(v, v)
        assert np.allclose(partial_trace(rho, (0,), 2), np.eye(2) / 2)

    def test_trace_nothing(self, rng):
        rho = random_state(rng, 4)
        assert np.allclose(partial_trace(rho, (), 2), rho)

    def test_insert_mixed_idempotent(self, rng):
        rho = random_state(rng, 8)
        once = insert_maximally_mixed(partial_trace(rho, (1,), 3), (1,), 3)
        twice = insert_maximally_mixed(partial_trace(once, (1,), 3), (1,), 3)
        assert abs(np.trace(once) - 1.0) < 1e-12
        assert np.allclose(once, twice)


class TestSpectrum:
    def test_pauli_z(self):
        spec = hermitian_eig(PAULI["Z"])
        assert np.allclose(spec.evals, [-1, 1])
        assert np.allclose(spec.bohr, [-2, 0, 2])

    def test_identity(self):
        spec = hermitian_eig(np.eye(4, dtype=complex))
        assert np.allclose(spec.bohr, [0.0])
        assert spec.evals.max() == spec.evals.min()

    def test_reconstruction_residual(self, rng):
        M = random_hermitian(rng, 8)
        spec = hermitian_eig(M)
        U, E = spec.evecs, spec.evals
        resid = linalg.op_norm(M - (U * E) @ U.conj().T)
        assert resid <= 1e-9 * max(1, np.abs(E).max())
        assert np.abs(U.conj().T @ U - np.eye(8)).max() <= 1e-10

    def test_bohr_sign_symmetric_with_zero(self, rng):
        spec = hermitian_eig(random_hermitian(rng, 8))
        assert 0.0 in spec.bohr
        assert np.allclose(np.sort(-spec.bohr), np.sort(spec.bohr))

    def test_bohr_index_consistency(self, rng):
        spec = hermitian_eig(random_hermitian(rng, 8))
        E = spec.evals
        diffs = E[:, None] - E[None, :]
        assert np.abs(spec.bohr[spec.bohr_index] - diffs).max() <= 2 * spec.dedup_tol

    def test_non_hermitian_rejected(self):
        with pytest.raises(NumericDomainError):
            hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))


class TestGibbs:
    def test_one_qubit(self):
        spec = hermitian_eig(PAULI["Z"])
        g = gibbs(spec, 1.0)
        Z = np.exp(-1) + np.exp(1)
        assert np.allclose(g.rho, np.diag([np.exp(-1), np.exp(1)]) / Z)
        assert abs(g.logZ - np.log(Z)) < 1e-12

    def test_infinite_temperature_limit(self, rng):
        spec = hermitian_eig(random_hermitian(rng, 8))
        g = gibbs(spec, 1e-8)
        assert np.abs(g.rho - np.eye(8) / 8).max() < 1e-6

    def test_two_site_diagonal(self):
        spec = hermitian_eig(np.kron(PAULI["Z"], PAULI["Z"]))
        g = gibbs(spec, 2.0)
        e = np.exp(-2.0 * np.array([1, -1, -1, 1]))
        assert np.allclose(g.rho, np.diag(e / e.sum()))

    def test_invalid_beta(self):
        spec = hermitian_eig(PAULI["Z"])
        with pytest.raises(InvalidParameterError):
            gibbs(spec, 0.0)

    def test_power_consistency(self, rng):
        spec = hermitian_eig(random_hermitian(rng, 8))
        g = gibbs(spec, 1.3)
        assert abs(np.trace(g.rho) - 1.0) <= 1e-12
        assert np.abs(g.power(0.25) @ g.power(0.25) - g.power(0.5)).max() <= 1e-10
        assert np.abs(g.power(0.5) @ g.power(-0.5) - np.eye(8)).max() <= 1e-8


class TestKms:
    def test_identity_normalization(self, rng):
        spec = hermitian_eig(random_hermitian(rng, 4))
        g = gibbs(spec, 0.7)
        assert abs(kms_inner(g, np.eye(4), np.eye(4)) - 1.0) < 1e-12

    def test_bounded_by_operator_norm(self, rng):
        spec = hermitian_eig(random_hermitian(rng, 4))
        for beta in (0.2, 1.0, 4.0):
            g = gibbs(spec, beta)
            for _ in range(50):
                X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
                assert kms_norm(g, X) <= linalg.op_norm(X) * (1 + 1e-12)

    def test_diagonal_classical_case(self, rng):
        spec = hermitian_eig(np.diag([0.3, -0.2, 0.9, 0.0]))
        g = gibbs(spec, 1.0)
        x = np.diag(rng.normal(size=4) + 1j * rng.normal(size=4))
        p = np.diag(g.rho).real
        expect = np.sum(p * np.abs(np.diag(x)) ** 2)
        assert abs(kms_inner(g, x, x) - expect) < 1e-12

    def test_inner_product_axioms(self, rng):
        spec = hermitian_eig(random_hermitian(rng, 4))
        g = gibbs(spec, 1.0)
        X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        Y = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        Z = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        assert abs(kms_inner(g, X, Y) - np.conj(kms_inner(g, Y, X))) < 1e-12
        lin = kms_inner(g, X, 0.7 * Y + 2j * Z)
        assert abs(lin - 0.7 * kms_inner(g, X, Y) - 2j * kms_inner(g, X, Z)) < 1e-11
        assert kms_inner(g, X, X).real > 0


class TestNorms:
    def test_trace_distance_zero(self, rng):
        rho = random_state(rng, 4)
        assert trace_distance(rho, rho) == 0.0

    def test_orthogonal_pure_states(self):
        assert abs(trace_distance(np.diag([1.0, 0]), np.diag([0, 1.0])) - 2.0) < 1e-14

    def test_scalar_formula(self):
        for p in (0.1, 0.5, 0.8):
            d = trace_distance(np.eye(2) / 2, np.diag([p, 1 - p]))
            assert abs(d - 2 * abs(p - 0.5)) < 1e-14


class TestSuperOps:
    def test_vec_convention(self, rng):
        P = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        Q = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        X = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        assert np.allclose(super_sandwich(P, Q) @ vec(X), vec(P @ X @ Q))

    def test_choi_of_identity(self):
        d = 3
        C = choi_matrix(np.eye(d * d, dtype=complex))
        v = np.zeros(d * d, dtype=complex)
        for k in range(d):
            v[k * d + k] = 1.0
        assert np.allclose(C, np.outer(v, v.conj()))

    def test_propagate_t0_and_zero_generator(self, rng):
        L = SuperOp.zero(4)
        X0 = random_hermitian(rng, 4)
        for backend in ("spectral", "ode"):
            assert np.allclose(propagate(L, X0, 0.0, backend=backend), X0)
            assert np.allclose(propagate(L, X0, 2.5, backend=backend), X0)

    def test_propagate_backends_agree(self, rng, gen3):
        X0 = random_state(rng, 8)
        a = propagate(gen3.full, X0, 0.7, backend="spectral")
        b = propagate(gen3.full, X0, 0.7, backend="ode")
        assert np.linalg.norm(a - b) <= 1e-7

    def test_propagate_preserves_hermiticity(self, rng, gen3):
        X0 = random_hermitian(rng, 8)
        for backend in ("spectral", "ode"):
            out = propagate(gen3.full, X0, 1.3, backend=backend)
            assert np.abs(out - out.conj().T).max() <= 1e-8

    def test_negative_time_rejected(self, rng, gen3):
        with pytest.raises(InvalidParameterError):
            propagate(gen3.full, np.eye(8, dtype=complex), -1.0)

    def test_dense_and_matrix_free_agree(self, rng, gen3):
        for _ in range(20):
            X = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
            Xe = gen3.spec.to_eigenbasis(X)
            a = gen3.full.apply_energy(Xe)            # dense path
            b = gen3.full.apply_energy_free(Xe)       # omega-quadrature path
            assert np.abs(a - b).max() <= 1e-9
