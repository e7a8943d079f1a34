"""Exactly detailed-balanced Lindbladian Gibbs samplers on small spin systems.

The package builds the Gaussian-filtered, Metropolis/Gaussian-weighted
Lindbladian whose fixed point is the Gibbs state, and verifies at desk
scale its recovery-map, Dirichlet-form, operator-Fourier-transform and
conditional-mutual-information properties.
"""

__version__ = "0.1.0"

from . import bounds, dirichlet, linalg, lindblad, markov, oft, recovery, spinsys
from ._accel import BACKEND as ACCEL_BACKEND
from .errors import (CapacityError, ConfigError, GibbsLabError,
                     InvalidModelError, InvalidParameterError,
                     InvalidRegionError, NumericDomainError, StiffnessError)
from .linalg import (GibbsState, Spectrum, SuperOp, gibbs, hermitian_eig,
                     kms_inner, kms_norm, partial_trace, propagate,
                     trace_distance)
from .lindblad import (Generator, TransitionCoeffs, Weight, assemble,
                       build_generator, coherent_term, coherent_term_bohr,
                       detailed_balance_residual, dissipative_part,
                       transition_coefficients)
from .markov import Tripartition, cmi_decay_scan, cmi_recovery_bound, qcmi, von_neumann_entropy
from .oft import (BohrDecomp, OftParams, bohr_decompose, conjugate_imaginary,
                  conjugation_norm, oft_heisenberg)
from .recovery import (RecoveryScenario, discard_region, patching_prepare,
                       recovery_error_curve, time_averaged_map,
                       truncated_recovery_error)
from .spinsys import (HamTerm, Hamiltonian, Jump, JumpSet, build_random_local,
                      build_classical_ising, build_tfim_chain, graph_distance,
                      single_site_jumps, truncate_patch)
