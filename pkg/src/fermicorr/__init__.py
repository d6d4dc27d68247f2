"""Correlation and entanglement measures for fermionic wave functions.

The toolkit enumerates determinant bases, diagonalizes model and
molecular Hamiltonians (built-in Hubbard chains or FCIDUMP input),
extracts reduced density matrices, and evaluates particle and orbital
correlation measures: nonfreeness, total orbital correlation, orbital
mutual information (with and without parity superselection), CI entropy,
and the correlation-function bound. Orbital-basis rotations and a Jacobi
minimizer verify that particle correlation equals the basis-minimized
total orbital correlation.
"""

__version__ = "0.1.0"

from .eig import EigResult, davidson_lowest, dense_lowest
from .errors import (CapacityError, ConvergenceError, DomainError,
                     FermicorrError, ParseError)
from .fock import (BasisMap, CiVector, apply_ladder, apply_one_body,
                   apply_two_body, basis_state, enumerate_basis, inner, norm,
                   read_fcivec, write_fcivec)
from .hamio import (MolecularIntegrals, build_hubbard, hamiltonian_action,
                    parse_fcidump, serialize_fcidump)
from .rdm import (FreeState, TwoRdm, free_state_from_one_rdm,
                  free_state_occupation_weights, free_state_two_rdm,
                  natural_orbitals, one_rdm, two_rdm)
from .corr import (CorrelationReport, LocalDensityMatrix, binary_entropy,
                   build_report, ci_entropy, correlation_function,
                   mutual_information, nonfreeness, orbital_reduced_state,
                   parity_superselect, pure_bipartite_entanglement,
                   total_orbital_correlation, von_neumann_entropy)
from .rot import (BasisRotation, MinimizeResult, haar_orthogonal,
                  minimize_total_correlation, natural_basis_rotation,
                  near_identity_orthogonal, paired_state,
                  rotate_state, rotate_two_electron_coeffs)

__all__ = [name for name in dir() if not name.startswith("_")]
