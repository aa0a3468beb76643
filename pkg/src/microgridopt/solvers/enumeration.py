"""Exhaustive-enumeration oracle.

Ground truth for acceptance tests: every integer assignment inside the
bounds gets its continuous subproblem solved (multistart on nonconvex
objectives), and the best value wins.  Guarded so nobody enumerates more
than 2**20 assignments by accident.  Assignments are visited in
lexicographic order and ties keep the first winner, so runs are
reproducible.

Pure-integer linear rows (rows whose continuous coefficients are all
zero) are checked before the NLP solve; assignments that already violate
one are rejected without solving.
"""

from __future__ import annotations

import itertools
import math
import time

import numpy as np

from ..errors import EnumerationGuardError
from ..problem import MinlpProblem, relax
from .config import (SolveResult, SolverConfig, TraceRecord,
                     STATUS_INFEASIBLE, STATUS_LIMIT, STATUS_OPTIMAL)
from .localnlp import solve_nlp_local

MAX_ASSIGNMENTS = 2 ** 20


def _integer_only_rows(problem: MinlpProblem):
    """(matrix, rhs, eq_mask) restricted to rows touching only integer
    variables, expressed over the integer variables alone."""
    lin = problem.linear
    if lin.n_rows == 0 or problem.n_int == 0:
        return None
    is_int = problem.integrality
    rows = []
    A = lin.matrix
    for r in range(lin.n_rows):
        cols = A.indices[A.indptr[r]:A.indptr[r + 1]]
        if len(cols) and np.all(is_int[cols]):
            rows.append(r)
    if not rows:
        return None
    sub = A[rows][:, problem.int_indices].toarray()
    return sub, lin.rhs[np.array(rows)], lin.eq_mask[np.array(rows)]


def enumerate_exhaustive(problem: MinlpProblem,
                         config: SolverConfig | None = None) -> SolveResult:
    config = config or SolverConfig()
    t0 = time.monotonic()
    int_idx = problem.int_indices

    lo = np.ceil(problem.lb[int_idx] - config.int_tol).astype(np.int64)
    hi = np.floor(problem.ub[int_idx] + config.int_tol).astype(np.int64)
    if np.any(lo > hi):
        return SolveResult(status=STATUS_INFEASIBLE, x=None,
                           objective=math.inf, bound=math.inf, gap=0.0,
                           algorithm="enumerate",
                           wall_time=time.monotonic() - t0)
    counts = (hi - lo + 1).astype(object)
    total = 1
    for c in counts:
        total *= int(c)
    if total > MAX_ASSIGNMENTS:
        raise EnumerationGuardError(
            f"{total} integer assignments exceed the guard "
            f"({MAX_ASSIGNMENTS}); shrink the instance")

    prefilter = _integer_only_rows(problem)
    multistart = not problem.is_convex

    best_obj = math.inf
    best_x: np.ndarray | None = None
    trace: list[TraceRecord] = []
    n_solved = 0
    hit_limit = False
    warm_point = None
    warm_mult = None

    for k, combo in enumerate(itertools.product(
            *[range(int(a), int(b) + 1) for a, b in zip(lo, hi)])):
        if time.monotonic() - t0 > config.time_limit:
            hit_limit = True
            break
        y = np.array(combo, dtype=np.float64)
        if prefilter is not None:
            sub, rhs, eq = prefilter
            vals = sub.dot(y)
            bad = np.any(np.abs(vals - rhs)[eq] > config.feas_tol) or \
                np.any((vals - rhs)[~eq] > config.feas_tol)
            if bad:
                trace.append(TraceRecord(k, -1, 0, math.inf,
                                         "prune-infeasible"))
                continue
        fix_lb = problem.lb.copy()
        fix_ub = problem.ub.copy()
        fix_lb[int_idx] = y
        fix_ub[int_idx] = y
        rel = relax(problem, fix_lb, fix_ub)
        if rel.empty:
            trace.append(TraceRecord(k, -1, 0, math.inf, "prune-empty"))
            continue
        start = None
        if warm_point is not None:
            start = np.clip(warm_point, fix_lb, fix_ub)
        res = solve_nlp_local(rel.problem, start=start, config=config,
                              warm_multipliers=warm_mult,
                              force_multistart=multistart)
        n_solved += 1
        if res.status == "infeasible" or \
                res.feasibility > 10.0 * config.feas_tol:
            trace.append(TraceRecord(k, -1, 0, math.inf, "prune-infeasible"))
            continue
        warm_point, warm_mult = res.x, res.multipliers
        trace.append(TraceRecord(k, -1, 0, res.objective, "subproblem",
                                 value=res.objective))
        if res.objective < best_obj:
            x = res.x.copy()
            x[int_idx] = y
            best_obj, best_x = res.objective, x
            trace.append(TraceRecord(k, -1, 0, res.objective, "incumbent",
                                     value=res.objective))

    wall = time.monotonic() - t0
    if best_x is None:
        status = STATUS_LIMIT if hit_limit else STATUS_INFEASIBLE
        return SolveResult(status=status, x=None, objective=math.inf,
                           bound=math.inf, gap=0.0, nodes=n_solved,
                           trace=trace, wall_time=wall, algorithm="enumerate")
    return SolveResult(
        status=STATUS_LIMIT if hit_limit else STATUS_OPTIMAL,
        x=best_x, objective=best_obj, bound=best_obj, gap=0.0,
        nodes=n_solved, iterations=n_solved, trace=trace, wall_time=wall,
        algorithm="enumerate",
        certificate="global" if problem.is_convex else "local-heuristic")
