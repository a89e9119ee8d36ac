"""Pseudospectral ground states of coupled fractional dispersive systems."""

__version__ = "0.1.0"

from .spectral import (Field, GridSpec, GridMismatchError, ParameterDomainError, SymbolKind,
                       UnsupportedDimensionError, frac_laplacian, h_s_seminorm_sq, inner,
                       integral_power, symmetric_decreasing_rearrangement, weighted_inner)
from .model import (CoupledState, EnergyBreakdown, Functional, SystemParams,
                    UnsupportedVariantError, Variant, VariantMismatchError, energy_phi,
                    gradient_phi, nehari_psi, psi_along_ray, reduced_f)
from .nehari import (NonConvergenceError, ProjectionError, SolveOptions, SolveResult,
                     initial_guesses, minimize_on_nehari, project_to_nehari)
from .scalar_gs import (TruncationWarning, quadratic_ground_state, rescale_v2, solve_scalar_u,
                        solve_scalar_v)
from .spectrum import (Classification, IndeterminateClassificationError, ThresholdResult,
                       Verdict, classify_semitrivial, lambda_threshold)
from .storage import FieldFormatError, load_field, save_field

__all__ = [
    "__version__",
    "Field", "GridSpec", "GridMismatchError", "ParameterDomainError", "SymbolKind",
    "UnsupportedDimensionError", "frac_laplacian", "h_s_seminorm_sq", "inner",
    "integral_power", "symmetric_decreasing_rearrangement", "weighted_inner",
    "CoupledState", "EnergyBreakdown", "Functional", "SystemParams", "UnsupportedVariantError",
    "Variant", "VariantMismatchError", "energy_phi", "gradient_phi", "nehari_psi",
    "psi_along_ray", "reduced_f",
    "NonConvergenceError", "ProjectionError", "SolveOptions", "SolveResult",
    "initial_guesses", "minimize_on_nehari", "project_to_nehari",
    "TruncationWarning", "quadratic_ground_state", "rescale_v2", "solve_scalar_u",
    "solve_scalar_v",
    "Classification", "IndeterminateClassificationError", "ThresholdResult", "Verdict",
    "classify_semitrivial", "lambda_threshold",
    "FieldFormatError", "load_field", "save_field",
]
