"""Sherali-Adams integrality gaps from basic-LP gaps: lifting, carving, tree propagation, exact checks."""

__version__ = "0.1.0"

from .csp import Constraint, Instance, Predicate, c5_maxcut, k3_maxcut, opt_exhaustive, opt_local_search
from .distributions import LocalDistribution
from .lp import build_basic_lp, build_sa_lp
from .simplex import solve_lp

__all__ = [
    "Constraint", "Instance", "Predicate", "LocalDistribution",
    "c5_maxcut", "k3_maxcut", "opt_exhaustive", "opt_local_search",
    "build_basic_lp", "build_sa_lp", "solve_lp", "__version__",
]
