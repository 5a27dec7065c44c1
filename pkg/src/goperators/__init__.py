"""Numerical calculus of G-operators on flat tori."""

from .errors import (CausticError, ConditioningError, DomainError, GOperatorError,
                     InversionError, SingularityError, TruncationError, UsageError)
from .phasespace import (CanonicalMap, CospherePoint, Hamiltonian, HomogeneousSymbol,
                         TorusGrid, TransverseSet, abs_p, check_homogeneous_canonical,
                         hamiltonian_from_name, identity_map, linear_hamiltonian,
                         quadratic_example, translation, transverse_zero_set)
from .hamflow import FlowMap, GeneratingFunction, generating_function, integrate_flow
from .quantize import (GridOperator, assemble_G_operator, band_norm, egorov_residual,
                       quantize_canonical, quantize_symbol, shift_operator)
from .crossed import (CrossedElement, GroupModel, convolve, finite_section_invertibility,
                      involution, restrict_to_transverse, symbol_inverse, trajectory_symbol)

__version__ = "0.1.0"
