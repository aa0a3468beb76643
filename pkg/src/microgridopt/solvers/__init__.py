"""MINLP algorithm suite: branch-and-bound, outer approximation,
extended cutting plane, the exhaustive-enumeration oracle, and the local
continuous subsolver they all share."""

from .branch_bound import branch_and_bound
from .config import (SolveResult, SolverConfig, TraceRecord, export_trace,
                     relative_gap, STATUS_FEASIBLE, STATUS_INFEASIBLE,
                     STATUS_LIMIT, STATUS_OPTIMAL)
from .cutting_plane import extended_cutting_plane
from .enumeration import enumerate_exhaustive, MAX_ASSIGNMENTS
from .localnlp import LocalResult, solve_nlp_local
from .outer_approx import outer_approximation

ALGORITHM_FUNCS = {
    "bb": branch_and_bound,
    "oa": outer_approximation,
    "ecp": extended_cutting_plane,
    "enumerate": enumerate_exhaustive,
}


def solve(problem, config: SolverConfig | None = None) -> SolveResult:
    """Dispatch on ``config.algorithm``."""
    config = config or SolverConfig()
    return ALGORITHM_FUNCS[config.algorithm](problem, config)


__all__ = [
    "SolveResult", "SolverConfig", "TraceRecord", "LocalResult",
    "branch_and_bound", "outer_approximation", "extended_cutting_plane",
    "enumerate_exhaustive", "solve_nlp_local", "solve", "export_trace",
    "relative_gap", "ALGORITHM_FUNCS", "MAX_ASSIGNMENTS",
    "STATUS_OPTIMAL", "STATUS_FEASIBLE", "STATUS_INFEASIBLE", "STATUS_LIMIT",
]
