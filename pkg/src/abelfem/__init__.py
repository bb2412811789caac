"""Galerkin solver for generalized Abel integral equations on uniform meshes."""
from .admissibility import AdmissibilityInput, evaluate as evaluate_admissibility
from .assembly import GalerkinSystem, assemble, dump_system, load_system
from .mesh import FeSolution, FeSpace, Mesh, build_space, build_uniform_mesh, interpolate
from .norms import SpectralNormEvaluator, cosine_coeffs, error_norm, x_norm
from .operator import AbelProblem, KernelSpec, apply_operator, experiment1, experiment2, get_problem
from .quadrature import QuadPolicy, gauss_jacobi, gauss_legendre, select_order_regular, select_order_rhs
from .solve import SingularSystemError, solve
from .studies import ConvergenceReport, StudyConfig, run_alpha_sweep, run_convergence, run_fixed_order_study

__all__ = [
    "AbelProblem", "AdmissibilityInput", "ConvergenceReport", "FeSolution", "FeSpace", "GalerkinSystem",
    "KernelSpec", "Mesh", "QuadPolicy", "SingularSystemError", "SpectralNormEvaluator", "StudyConfig",
    "apply_operator", "assemble", "build_space", "build_uniform_mesh", "cosine_coeffs", "dump_system",
    "error_norm", "evaluate_admissibility", "experiment1", "experiment2", "gauss_jacobi", "gauss_legendre",
    "get_problem", "interpolate", "load_system", "run_alpha_sweep", "run_convergence", "run_fixed_order_study",
    "select_order_regular", "select_order_rhs", "solve", "x_norm",
]
__version__ = "0.1.0"
