"""Solver configuration, results, and trace records."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

STATUS_OPTIMAL = "optimal"
STATUS_FEASIBLE = "feasible"
STATUS_INFEASIBLE = "infeasible"
STATUS_LIMIT = "limit"

ALGORITHMS = ("bb", "oa", "ecp", "enumerate")
BRANCHING_RULES = ("most-fractional", "lowest-index")


@dataclass
class SolverConfig:
    algorithm: str = "bb"
    node_limit: int = 200000
    iteration_limit: int = 200
    time_limit: float = 600.0          # seconds
    gap_tol: float = 1e-6              # relative optimality gap
    feas_tol: float = 1e-6             # raw constraint violation
    int_tol: float = 1e-6
    branching: str = "most-fractional"
    multistart: int = 5                # local-NLP starts on nonconvex problems
    seed: int = 0
    threads: int = 1                   # reserved; current solvers run serial
    # local NLP tuning knobs
    nlp_outer_limit: int = 60
    nlp_inner_limit: int = 4000

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.branching not in BRANCHING_RULES:
            raise ValueError(f"unknown branching rule {self.branching!r}")
        for name in ("node_limit", "iteration_limit", "multistart", "threads",
                     "nlp_outer_limit", "nlp_inner_limit"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("time_limit", "gap_tol", "feas_tol", "int_tol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    def replace(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


def relative_gap(objective: float, bound: float) -> float:
    """(objective - bound) / max(1, |objective|); inf when no incumbent."""
    if not np.isfinite(objective):
        return float("inf")
    return (objective - bound) / max(1.0, abs(objective))


@dataclass(frozen=True)
class TraceRecord:
    """One line of a solver trace; stable schema.

    ``action`` is one of: relaxed, branch, integral, incumbent,
    prune-bound, prune-infeasible, prune-empty, cut, master, subproblem.
    ``var`` and ``value`` describe the branching variable (or cut index)
    when the action has one, else -1 / nan.
    """

    node: int
    parent: int
    depth: int
    bound: float
    action: str
    var: int = -1
    value: float = float("nan")

    def to_line(self) -> str:
        return (f"node {self.node} parent {self.parent} depth {self.depth} "
                f"bound {self.bound!r} action {self.action} "
                f"var {self.var} value {self.value!r}")


@dataclass
class SolveResult:
    """Outcome of one solver run.

    ``bound`` is the best proven lower bound (for minimization);
    ``gap = (objective - bound)/max(1, |objective|)``.  On nonconvex
    problems solved by multistart branch-and-bound the bound is local /
    heuristic, flagged through ``certificate``.
    """

    status: str
    x: Optional[np.ndarray]
    objective: float
    bound: float
    gap: float
    nodes: int = 0
    iterations: int = 0
    wall_time: float = 0.0
    trace: list[TraceRecord] = field(default_factory=list)
    certificate: str = "global"   # "global" | "local-heuristic"
    algorithm: str = ""
    root_warm: tuple | None = None  # multiplier warm-start data, not serialized

    @property
    def has_solution(self) -> bool:
        return self.x is not None


def export_trace(result: SolveResult, path) -> None:
    """Write the node trace as line-delimited records (schema above)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"trace v1 algorithm {result.algorithm} "
                 f"records {len(result.trace)}\n")
        for rec in result.trace:
            fh.write(rec.to_line() + "\n")
