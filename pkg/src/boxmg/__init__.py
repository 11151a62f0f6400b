"""Two-level Riemannian optimization on the open box for tomographic reconstruction."""
from .manifold import EPS_CLIP, exp_inv, exp_map, geometric_mean, riem_grad
from .transfer import GridHierarchy, prolong, restrict, restrict_tangent
from .linesearch import LineFunction, WolfeParams, armijo_search, hz_search
from .objective import Problem
from .tomography import PHANTOMS, ScanGeometry, build_matrix, make_phantom, synthesize
from .optimizer import (MODES, SolverConfig, Trace, run_projected_gradient,
                        run_single_level, run_two_level_euclidean,
                        run_two_level_geometric, solve)

__version__ = "0.1.0"

__all__ = [
    "EPS_CLIP", "exp_inv", "exp_map", "geometric_mean", "riem_grad",
    "GridHierarchy", "prolong", "restrict", "restrict_tangent",
    "LineFunction", "WolfeParams", "armijo_search", "hz_search",
    "Problem",
    "PHANTOMS", "ScanGeometry", "build_matrix", "make_phantom", "synthesize",
    "MODES", "SolverConfig", "Trace", "run_projected_gradient", "run_single_level",
    "run_two_level_euclidean", "run_two_level_geometric", "solve",
]
