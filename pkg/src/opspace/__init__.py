"""Collective-spin Lindblad dynamics in the spherical tensor operator basis."""

from .spin import SpinSystem, build_spin_system, commutator
from .tensors import (CGCoefficient, TensorBasis, build_tensor_basis, cg, clebsch_gordan,
                      couple_tensors, dump_basis_json, flat_index, kq_labels, load_basis_json,
                      verify_ladder)
from .liouvillian import (ModelSpec, Superoperator, adjoint_superoperator, build_liouvillian,
                          build_product_liouvillian, casimir_superoperator, lindbladian,
                          unvectorize, vectorize)
from .spectral import (ExceptionalPointError, ModeProfile, SpectralData, decompose,
                       profile_mode, slowest_oscillatory_pair, track_mode)
from .lattice import (ConsistencyError, LatticeCouplings, extract_couplings, projector,
                      rank_coupling_matrix, reconstruct, verify_selection_rules)
from .dynamics import (CoefficientState, SourceDecomposition, Trajectory, coefficient_trajectory,
                       dipole_normalization, evolve, expectation, initial_state,
                       kappa_sweep, precession_analytic, source_decompose,
                       state_from_density)
from .perturbative import (build_effective, perturbation_error, perturbative_spectrum,
                           rotate_basis)

__version__ = "0.1.0"
