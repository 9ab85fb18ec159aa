"""Scattering theory for dissipatively perturbed Hamiltonians.

Stationary scattering matrices S(lam) for H = H0 + V - i C*C acting fiber-wise
over an energy band, detection of the spectral singularities where S(lam)
loses invertibility, brute-force matrix oracles that cross-check the
stationary formulas, and a radial optical-model solver.
"""

__version__ = "0.1.0"

from ._accel import get_backend, set_backend
from .boundary import (SINGULARITY_RTOL, StationaryBlocks, boundary_bundle,
                       cauchy_transform, crc_full_minus, crc_full_plus,
                       full_block, r0_block, rv_block)
from .errors import (CalibrationError, ConfigError, DisscatError, DomainError,
                     ExceptionalPointError, NumericalFailure,
                     SpectralSingularityError)
from .models import (BUILTIN_NAMES, ChebyshevMap, FiberMap, GaussMap,
                     Interval, Model, ValidationReport, ZeroMap,
                     builtin_model, chebyshev_fit, eval_fiber, interior_grid,
                     model_from_json, model_to_json, validate_model)
from .oracle import (DiscretizedSystem, absorption_probabilities,
                     default_horizon, discretize, intertwining_residual,
                     matrix_boundary_block, scatt_operator, subspaces,
                     wave_minus, wave_plus_adj)
from .optical import (Potential, RadialProblem, assemble_s_matrix, cpa_tune,
                      infinity_regularity, resonance_scan, solve_partial_wave,
                      square_well_s0)
from .scattering import (GammaBlocks, SMatrixResult, defect_closed_form_v0,
                         gamma_blocks, s_inverse, s_matrix, s_v_matrix)
from .singularity import (EndpointVerdict, PointVerdict, SingularityReport,
                          a_matrix, classify_point, endpoint_regularity, scan)

__all__ = [
    "__version__",
    "get_backend", "set_backend",
    "SINGULARITY_RTOL", "StationaryBlocks", "boundary_bundle",
    "cauchy_transform", "crc_full_minus", "crc_full_plus", "full_block",
    "r0_block", "rv_block",
    "CalibrationError", "ConfigError", "DisscatError", "DomainError",
    "ExceptionalPointError", "NumericalFailure", "SpectralSingularityError",
    "BUILTIN_NAMES", "ChebyshevMap", "FiberMap", "GaussMap", "Interval",
    "Model", "ValidationReport", "ZeroMap", "builtin_model", "chebyshev_fit",
    "eval_fiber", "interior_grid", "model_from_json", "model_to_json",
    "validate_model",
    "DiscretizedSystem", "absorption_probabilities", "default_horizon",
    "discretize", "intertwining_residual", "matrix_boundary_block",
    "scatt_operator", "subspaces", "wave_minus", "wave_plus_adj",
    "Potential", "RadialProblem", "assemble_s_matrix", "cpa_tune",
    "infinity_regularity", "resonance_scan", "solve_partial_wave",
    "square_well_s0",
    "GammaBlocks", "SMatrixResult", "defect_closed_form_v0", "gamma_blocks",
    "s_inverse", "s_matrix", "s_v_matrix",
    "EndpointVerdict", "PointVerdict", "SingularityReport", "a_matrix",
    "classify_point", "endpoint_regularity", "scan",
]
