import math

import numpy as np
import pytest

from conftest import random_state
from gibbslab import markov
from gibbslab.errors import InvalidParameterError, InvalidRegionError
from gibbslab.linalg import gibbs, hermitian_eig
from gibbslab.markov import (Tripartition, cmi_decay_scan, cmi_recovery_bound,
                             is_shielded, qcmi, von_neumann_entropy)
from gibbslab.spinsys import build_classical_ising, build_tfim_chain


class TestEntropy:
    def test_pure_state(self):
        v = np.array([1.0, 1.0, 0, 0]) / np.sqrt(2)
        assert abs(von_neumann_entropy(np.outer(v, v))) <= 1e-12

    def test_maximally_mixed(self):
        for n in (1, 2, 3):
            rho = np.eye(2 ** n) / 2 ** n
            assert abs(von_neumann_entropy(rho) - n * math.log(2)) <= 1e-12

    def test_two_outcome_formula(self):
        rho = np.diag([0.25, 0.75])
        expect = -0.25 * math.log(0.25) - 0.75 * math.log(0.75)
        assert abs(von_neumann_entropy(rho) - expect) <= 1e-12

    def test_trace_validation(self):
        with pytest.raises(InvalidParameterError):
            von_neumann_entropy(np.diag([0.5, 0.6]))


class TestTripartition:
    def test_disjoint_exhaustive(self):
        with pytest.raises(InvalidRegionError):
            Tripartition((0,), (0, 1), (2,), 3)
        with pytest.raises(InvalidRegionError):
            Tripartition((0,), (1,), (), 3)

    def test_valid(self):
        p = Tripartition((0,), (1, 2), (3,), 4)
        assert p.B == (1, 2)


class TestQcmi:
    def test_product_state(self, rng):
        rho = np.kron(np.kron(random_state(rng, 2), random_state(rng, 2)),
                      random_state(rng, 2))
        p = Tripartition((0,), (1,), (2,), 3)
        assert abs(qcmi(rho, p)) <= 1e-10

    def test_ghz(self):
        v = np.zeros(8)
        v[0] = v[7] = 1 / np.sqrt(2)
        p = Tripartition((0,), (1,), (2,), 3)
        assert abs(qcmi(np.outer(v, v), p) - math.log(2)) <= 1e-10

    def test_strong_subadditivity_random(self, rng):
        p = Tripartition((0,), (1,), (2,), 3)
        for _ in range(15):
            assert qcmi(random_state(rng, 8), p) >= -1e-8

    def test_pure_state_identity(self, rng):
        # for pure global states I(A:C|B) = S(A) + S(C) - S(B)
        from gibbslab.linalg import partial_trace
        v = rng.normal(size=16) + 1j * rng.normal(size=16)
        v /= np.linalg.norm(v)
        rho = np.outer(v, v.conj())
        p = Tripartition((0,), (1, 2), (3,), 4)
        i1 = qcmi(rho, p)
        sA = von_neumann_entropy(partial_trace(rho, (1, 2, 3), 4))
        sB = von_neumann_entropy(partial_trace(rho, (0, 3), 4))
        sC = von_neumann_entropy(partial_trace(rho, (0, 1, 2), 4))
        assert abs(i1 - (sA + sC - sB)) <= 1e-9

    def test_classical_ising_shielded(self):
        H = build_classical_ising(6)
        rho = gibbs(hermitian_eig(H.to_dense()), 1.0).rho
        for b0 in range(1, 5):
            A = tuple(range(b0))
            for c0 in range(b0 + 1, 6):
                B = tuple(range(b0, c0))
                C = tuple(range(c0, 6))
                part = Tripartition(A, B, C, 6)
                assert is_shielded(H, A, C)
                assert abs(qcmi(rho, part)) <= 1e-9


class TestRecoveryBound:
    def test_zero(self):
        assert cmi_recovery_bound(0.0, 4) == 0.0

    def test_half(self):
        expect = 0.5 * math.log(2) + math.log(2)   # h2(1/2) = ln 2
        assert abs(cmi_recovery_bound(0.5, 2) - expect) <= 1e-12

    def test_clamps_with_warning(self):
        with pytest.warns(UserWarning):
            assert cmi_recovery_bound(1.5, 2) == cmi_recovery_bound(1.0, 2)

    def test_dominates_measured_qcmi(self):
        # joint experiment: truncated recovery error bounds the CMI
        from gibbslab.recovery import RecoveryScenario, truncated_recovery_error
        H = build_tfim_chain(4, 1.0, 0.9)
        rho = gibbs(hermitian_eig(H.to_dense()), 1.0).rho
        part = Tripartition((0,), (1, 2), (3,), 4)
        i_meas = qcmi(rho, part)
        sc = RecoveryScenario(H, 1.0, 1.0, (0,), (100.0,), ell=2)
        delta = 0.5 * truncated_recovery_error(sc)[0]["err_trunc"]
        assert i_meas <= cmi_recovery_bound(delta, 2) + 1e-12


class TestDecayScan:
    def test_classical_all_zero_fit_skipped(self):
        H = build_classical_ising(7)
        res = cmi_decay_scan(H, 1.0)
        assert all(abs(r.qcmi) <= 1e-9 for r in res.rows)
        assert res.slope is None

    def test_near_infinite_temperature(self):
        H = build_tfim_chain(6, 1.0, 1.0)
        res = cmi_decay_scan(H, 1e-6)
        assert all(abs(r.qcmi) <= 1e-6 for r in res.rows)

    def test_tfim_decays(self):
        H = build_tfim_chain(8, 1.0, 1.0)
        res = cmi_decay_scan(H, 1.0)
        assert res.slope is not None
        assert res.slope < 0
        assert res.r2 >= 0.9
