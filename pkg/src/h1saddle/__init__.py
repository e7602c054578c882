"""Index-1 saddle search for mass-conserving phase-field energies.

The projected methods work in L2 on zero-mean fields and locate the same
saddles as the direct H^-1 iteration, without Poisson solves in the inner loop.
"""

from .energy import (GinzburgLandau, LandauBrazovskii, energy, ginzburg_landau, gradient_l2,
                     hessian_apply, landau_brazovskii)
from .grid import Field, Grid, inner_l2, integrate, read_field, write_field
from .minmode import Metric, MinModeOptions, dense_oracle, min_mode, rayleigh_quotient
from .operators import OperatorBackend, inner_hminus1, inverse_neg_laplacian, laplacian, project
from .saddle import (Method, SearchConfig, auxiliary_gradient, gad_search, gad_step, imf_search,
                     translation_step_convex_split, translation_step_imex, verify_index1)

__version__ = "0.1.0"

__all__ = [
    "Field", "Grid", "GinzburgLandau", "LandauBrazovskii", "Method", "Metric", "MinModeOptions",
    "OperatorBackend", "SearchConfig", "auxiliary_gradient", "dense_oracle", "energy",
    "gad_search", "gad_step", "ginzburg_landau", "gradient_l2", "hessian_apply", "imf_search",
    "inner_hminus1", "inner_l2", "integrate", "inverse_neg_laplacian", "landau_brazovskii",
    "laplacian", "min_mode", "project", "rayleigh_quotient", "read_field",
    "translation_step_convex_split", "translation_step_imex", "verify_index1", "write_field",
]
