"""Uniform antithetic vectors from segment sets."""

__version__ = "0.1.0"

from .catalog import Construction, catalog_constructions
from .concordance import (
    ConcordanceReport,
    construction_report,
    empirical_rho,
    empirical_tau,
    exact_report,
    ilh_tau_rho,
    kendall_tau_exact,
    kendall_tau_min,
    spearman_rho_exact,
    spearman_rho_min,
    xi_star,
)
from .errors import SegsampleError, SolverError, ValidationError
from .optimizer import (
    UniformityProblem,
    solve_circulant,
    solve_standard_uniform,
    solve_strict_ctm,
)
from .sampling import DrawBatch, draw, draw_generalized, glh_sample
from .segments import SegmentSet, build_segment_set, load_segment_set, uniformity_residuals

__all__ = [
    "__version__",
    "Construction",
    "catalog_constructions",
    "ConcordanceReport",
    "construction_report",
    "empirical_rho",
    "empirical_tau",
    "exact_report",
    "ilh_tau_rho",
    "kendall_tau_exact",
    "kendall_tau_min",
    "spearman_rho_exact",
    "spearman_rho_min",
    "xi_star",
    "SegsampleError",
    "SolverError",
    "ValidationError",
    "UniformityProblem",
    "solve_circulant",
    "solve_standard_uniform",
    "solve_strict_ctm",
    "DrawBatch",
    "draw",
    "draw_generalized",
    "glh_sample",
    "SegmentSet",
    "build_segment_set",
    "load_segment_set",
    "uniformity_residuals",
]
