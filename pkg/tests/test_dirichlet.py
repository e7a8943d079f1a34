import math
import warnings

import numpy as np
import pytest

from conftest import random_hermitian
from gibbslab import dirichlet, lindblad
from gibbslab.dirichlet import (DirichletKernels, abar_table,
                                cosh_time_integral, dirichlet_bilinear,
                                dirichlet_commutator_integral,
                                dirichlet_direct, metropolis_h_omega_xintegral,
                                metropolis_kernel_identity)
from gibbslab.linalg import hermitian_eig
from gibbslab.lindblad import Weight, assemble, transition_coefficients
from gibbslab.spinsys import PAULI, single_site_jumps


@pytest.fixture(scope="module")
def one_qubit():
    spec = hermitian_eig(PAULI["Z"])
    w = Weight.metropolis(1.0, 1.0)
    gen = assemble(spec, [PAULI["X"]], w)
    return spec, w, gen


class TestDirectForm:
    def test_identity_is_stationary(self, gen3):
        assert abs(dirichlet_direct(gen3, gen3.gibbs, np.eye(8, dtype=complex))) <= 1e-12
        assert abs(dirichlet_direct(gen3, gen3.gibbs, 3.7 * np.eye(8, dtype=complex))) <= 1e-11

    def test_nonnegative(self, rng, gen3):
        for _ in range(20):
            X = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
            assert dirichlet_direct(gen3, gen3.gibbs, X) >= -1e-9


class TestBilinearForm:
    def test_matches_direct(self, rng, gen3, tfim3):
        _, spec = tfim3
        w = gen3.weight
        tc = transition_coefficients(spec, w)
        jm = [j.embedded(3) for j in gen3.jumps]
        for _ in range(30):
            X = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
            d = dirichlet_direct(gen3, gen3.gibbs, X)
            b = dirichlet_bilinear(spec, gen3.gibbs, jm, tc, X, X)
            assert abs(b.imag) <= 1e-9 * max(abs(d), 1e-9)
            assert abs(d - b.real) <= 1e-7 * max(abs(d), 1e-12)

    def test_identity_gives_zero(self, tfim3, gen3):
        _, spec = tfim3
        tc = transition_coefficients(spec, gen3.weight)
        jm = [j.embedded(3) for j in gen3.jumps]
        val = dirichlet_bilinear(spec, gen3.gibbs, jm, tc,
                                 np.eye(8, dtype=complex), np.eye(8, dtype=complex))
        assert abs(val) <= 1e-12

    def test_abar_sign_flip_symmetry(self, tfim3):
        _, spec = tfim3
        for w in (Weight.metropolis(1.3, 0.8), Weight.gaussian(1.3, 0.8)):
            tc = transition_coefficients(spec, w)
            ab = abar_table(tc)
            assert np.abs(ab - ab[::-1, ::-1]).max() <= 1e-12 * max(ab.max(), 1.0)


class TestQuadratureForm:
    def test_one_qubit_three_way(self, rng, one_qubit):
        spec, w, gen = one_qubit
        kern = DirichletKernels.for_model(w, spec.op_norm, nodes_t=96, nodes_omega=96)
        for _ in range(3):
            G = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            X = (G + G.conj().T) / 2
            d = dirichlet_direct(gen, gen.gibbs, X)
            q = dirichlet_commutator_integral(spec, gen.gibbs, [PAULI["X"]], kern, X)
            assert q.converged
            assert abs(q.value - d) <= 1e-5 * max(abs(d), 1e-9)

    def test_three_qubit_both_weights(self, rng, tfim3):
        _, spec = tfim3
        jumps = single_site_jumps((0,))
        jm = [j.embedded(3) for j in jumps]
        for w in (Weight.metropolis(1.0), Weight.gaussian(1.0)):
            gen = assemble(spec, jumps, w)
            kern = DirichletKernels.for_model(w, spec.op_norm)
            G = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
            X = (G + G.conj().T) / 2
            d = dirichlet_direct(gen, gen.gibbs, X)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                q = dirichlet_commutator_integral(spec, gen.gibbs, jm, kern, X)
            assert abs(q.value - d) <= 1e-5 * max(abs(d), 1e-9)

    def test_stationary_operator_nodes_vanish(self, one_qubit):
        spec, w, gen = one_qubit
        kern = DirichletKernels.for_model(w, spec.op_norm, nodes_t=16, nodes_omega=16)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            q = dirichlet_commutator_integral(spec, gen.gibbs, [PAULI["X"]], kern,
                                              np.eye(2, dtype=complex))
        assert abs(q.value) <= 1e-12
        q2 = dirichlet_commutator_integral(spec, gen.gibbs, [PAULI["X"]], kern,
                                           2.2 * np.eye(2, dtype=complex))
        assert abs(q2.value) <= 1e-11

    def test_nonneg_and_warning_channel(self, rng, one_qubit):
        from gibbslab.errors import QuadratureWarning
        spec, w, gen = one_qubit
        kern = DirichletKernels(w, t_max=3.0, omega_max=3.0, nodes_t=2, nodes_omega=2)
        X = random_hermitian(rng, 2)
        with pytest.warns(QuadratureWarning):
            q = dirichlet_commutator_integral(spec, gen.gibbs, [PAULI["X"]], kern, X)
        assert q.value >= 0.0
        assert not q.converged


class TestKernels:
    def test_positivity_and_g_integral(self):
        from scipy.integrate import quad
        for beta in (0.5, 1.0, 3.0):
            w = Weight.metropolis(beta)
            k = DirichletKernels.for_model(w, 1.0)
            ts = np.linspace(-5 * beta, 5 * beta, 31)
            assert (k.g(ts) >= 0).all()
            assert (k.h(np.linspace(-9, 9, 31)) >= 0).all()
            val, _ = quad(lambda t: float(k.g(t)), -9 * beta, 9 * beta, limit=300)
            assert abs(val - 0.5) <= 1e-10

    def test_metropolis_h_closed_values(self):
        # sigma = 1/beta: h(0) = e^{-1/8}; h(4/beta) = e^{-1/8} e^{-2}
        w = Weight.metropolis(1.0, 1.0)
        k = DirichletKernels.for_model(w, 1.0)
        assert abs(float(k.h(0.0)) - math.exp(-0.125)) <= 1e-14
        assert abs(float(k.h(4.0)) - math.exp(-0.125) * math.exp(-2.0)) <= 1e-14
        assert abs(float(k.h(0.0)) - 0.8824969) <= 1e-6

    def test_h_matches_x_integral(self):
        w = Weight.metropolis(1.0, 1.0)
        k = DirichletKernels.for_model(w, 1.0)
        for omega in (0.0, 0.7, 4.0):
            assert abs(float(k.h(omega))
                       - metropolis_h_omega_xintegral(omega, 1.0, 1.0)) <= 1e-8

    def test_cosh_identity(self):
        for beta in (0.5, 2.0):
            for nu in (0.0, 1.0, 3.0):
                closed = 0.5 / math.cosh(beta * nu / 4.0)
                assert abs(closed - cosh_time_integral(nu, beta)) <= 1e-10

    def test_equal_frequencies_give_half(self):
        # nu1 = nu2: the cosh factor equals the full g integral 1/2
        assert abs(cosh_time_integral(0.0, 1.7) - 0.5) <= 1e-10

    def test_grid_report(self):
        rep = metropolis_kernel_identity(betas=(0.5, 1.0, 2.0), n_omega=10)
        assert rep["pass"]

    def test_gaussian_kernel_shares_code_path(self, rng, tfim3):
        _, spec = tfim3
        w = Weight.gaussian(1.0, 1.0, omega_gamma=1.5)
        k = DirichletKernels.for_model(w, spec.op_norm)
        expect = (math.exp(-w.beta * w.omega_gamma / 4.0)
                  * math.exp(-1.21 / (2 * w.sigma_gamma ** 2)))
        assert abs(float(k.h(1.1)) - expect) <= 1e-14
