"""Semidefinite relaxations, cuts and moment liftings for the complex cut polytope."""

from .conic import ConeSpec, ConicProblem, Settings, Solution, Status, solve
from .cuts import CutDescriptor, clique_cut, h_cut, strength
from .lifting import MomentBasis, lifted_max, projection_distance, resolve_basis
from .linalg import INF, roots_of_unity
from .oracle import brute_max, cut_membership, verify_facet
from .relax import FeasibleSet, Kind, solve_relaxation

__all__ = [
    "INF", "ConeSpec", "ConicProblem", "CutDescriptor", "FeasibleSet", "Kind", "MomentBasis",
    "Settings", "Solution", "Status", "brute_max", "clique_cut", "cut_membership", "h_cut",
    "lifted_max", "projection_distance", "resolve_basis", "roots_of_unity", "solve",
    "solve_relaxation", "strength", "verify_facet",
]
__version__ = "0.1.0"
