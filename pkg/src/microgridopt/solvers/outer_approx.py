"""Outer approximation for convex MINLPs.

Alternates a mixed-integer linear master built from linearization cuts
(solved by this package's own branch-and-bound, which degenerates to an
LP-based MILP solver on linear input) with a continuous subproblem that
pins the integers to the master's choice.  The master supplies
nondecreasing lower bounds, the subproblems supply incumbents and new
cuts; iteration stops when the bounds close to the gap tolerance or the
master runs out of integer assignments.

Refuses nonconvex input outright: a cut through a nonconvex function can
slice away the optimum and silently return garbage, which is worse than
an error.
"""

from __future__ import annotations

import math
import time

import numpy as np

from ..errors import NonconvexProblemError
from ..problem import MinlpProblem, linearize_constraint, relax
from ._master import MasterBuilder
from .branch_bound import branch_and_bound
from .config import (SolveResult, SolverConfig, TraceRecord, relative_gap,
                     STATUS_INFEASIBLE, STATUS_LIMIT, STATUS_OPTIMAL)
from .localnlp import solve_nlp_local


def _require_convex(problem: MinlpProblem, algorithm: str):
    bad = []
    if problem.obj_nonlinear is not None and not problem.obj_nonlinear.convex:
        bad.append(problem.obj_nonlinear.name)
    bad.extend(c.name for c in problem.nonlinear if not c.convex)
    if bad:
        raise NonconvexProblemError(
            f"{algorithm} requires convex flags on all nonlinear pieces; "
            f"nonconvex: {', '.join(bad)}. Use branch-and-bound "
            "(local/heuristic on nonconvex models) instead.")


def _master_config(config: SolverConfig, t0: float) -> SolverConfig:
    remaining = max(1e-3, config.time_limit - (time.monotonic() - t0))
    return config.replace(gap_tol=max(1e-9, 0.01 * config.gap_tol),
                          time_limit=remaining)


def _add_point_cuts(builder: MasterBuilder, problem: MinlpProblem,
                    z: np.ndarray, tag: str):
    if problem.obj_nonlinear is not None:
        f = float(problem.obj_nonlinear.fun(z))
        g = np.asarray(problem.obj_nonlinear.grad(z), dtype=np.float64)
        builder.add_objective_cut(z, f, g, f"objcut[{tag}]")
    for i in range(len(problem.nonlinear)):
        cut = linearize_constraint(problem, i, z)
        builder.add_constraint_cut(cut.coeffs, cut.rhs, f"{cut.name}[{tag}]")


def outer_approximation(problem: MinlpProblem,
                        config: SolverConfig | None = None) -> SolveResult:
    config = config or SolverConfig()
    _require_convex(problem, "outer approximation")
    t0 = time.monotonic()
    trace: list[TraceRecord] = []
    int_idx = problem.int_indices

    # Degenerate case: nothing nonlinear, the master IS the problem.
    if problem.obj_nonlinear is None and not problem.nonlinear:
        res = branch_and_bound(problem, config)
        res.algorithm = "oa"
        res.iterations = 1
        return res

    root = solve_nlp_local(relax(problem).problem, config=config)
    if root.status == "infeasible":
        return SolveResult(status=STATUS_INFEASIBLE, x=None,
                           objective=math.inf, bound=math.inf, gap=0.0,
                           algorithm="oa", wall_time=time.monotonic() - t0)

    builder = MasterBuilder(problem)
    _add_point_cuts(builder, problem, root.x, "root")

    ub = math.inf
    incumbent: np.ndarray | None = None
    lb = -math.inf
    visited: set[tuple] = set()
    nodes = 0
    status = STATUS_LIMIT
    iterations = 0
    warm_start = root.x
    if builder.has_eta:
        warm_start = np.append(root.x, float(problem.obj_nonlinear.fun(root.x)))
    warm_mult = None

    for it in range(1, config.iteration_limit + 1):
        iterations = it
        if time.monotonic() - t0 > config.time_limit:
            break
        master = builder.build()
        mres = branch_and_bound(master, _master_config(config, t0),
                                root_start=warm_start, root_warm=warm_mult)
        nodes += mres.nodes
        if mres.x is not None:
            warm_start = mres.x
            warm_mult = mres.root_warm
        if mres.status == STATUS_INFEASIBLE:
            # every integer assignment is cut off; the incumbent is it
            lb = ub
            status = STATUS_OPTIMAL if incumbent is not None \
                else STATUS_INFEASIBLE
            trace.append(TraceRecord(it, -1, 0, lb, "master"))
            break
        if mres.x is None:
            break
        lb = max(lb, mres.objective)
        trace.append(TraceRecord(it, -1, 0, lb, "master",
                                 value=mres.objective))
        scale = max(1.0, abs(ub)) if np.isfinite(ub) else 1.0
        if lb >= ub - config.gap_tol * scale:
            status = STATUS_OPTIMAL
            break

        y_k = np.round(mres.x[int_idx])
        key = tuple(int(v) for v in y_k)
        if key in visited:
            # no-good unavailable (non-binary integers) and the master
            # keeps proposing an explored assignment: bounds have met as
            # tightly as the cuts allow
            status = STATUS_OPTIMAL if (incumbent is not None and
                                        relative_gap(ub, lb) <= 1e3 * config.gap_tol) \
                else STATUS_LIMIT
            break
        visited.add(key)

        fix_lb = problem.lb.copy()
        fix_ub = problem.ub.copy()
        fix_lb[int_idx] = y_k
        fix_ub[int_idx] = y_k
        sub = relax(problem, fix_lb, fix_ub)
        sres = solve_nlp_local(sub.problem,
                               start=np.clip(mres.x[:problem.n], fix_lb, fix_ub),
                               config=config)
        if sres.status != "infeasible" and \
                sres.feasibility <= 10.0 * config.feas_tol:
            trace.append(TraceRecord(it, -1, 0, sres.objective, "subproblem",
                                     value=sres.objective))
            if sres.objective < ub:
                ub = sres.objective
                incumbent = sres.x.copy()
                incumbent[int_idx] = y_k
                trace.append(TraceRecord(it, -1, 0, ub, "incumbent",
                                         value=ub))
            _add_point_cuts(builder, problem, sres.x, f"it{it}")
        else:
            # infeasible assignment: cut from the minimum-infeasibility
            # point (the local solver's feasibility phase endpoint)
            trace.append(TraceRecord(it, -1, 0, math.inf, "subproblem"))
            _add_point_cuts(builder, problem, sres.x, f"feas{it}")
        builder.add_nogood(y_k, f"nogood[{it}]")

        scale = max(1.0, abs(ub)) if np.isfinite(ub) else 1.0
        if lb >= ub - config.gap_tol * scale:
            status = STATUS_OPTIMAL
            break

    wall = time.monotonic() - t0
    if incumbent is None:
        if status == STATUS_INFEASIBLE:
            return SolveResult(status=STATUS_INFEASIBLE, x=None,
                               objective=math.inf, bound=math.inf, gap=0.0,
                               nodes=nodes, iterations=iterations,
                               trace=trace, wall_time=wall, algorithm="oa")
        return SolveResult(status=STATUS_LIMIT, x=None, objective=math.inf,
                           bound=lb, gap=math.inf, nodes=nodes,
                           iterations=iterations, trace=trace,
                           wall_time=wall, algorithm="oa")
    bound = min(lb, ub)
    return SolveResult(status=status, x=incumbent, objective=ub, bound=bound,
                       gap=relative_gap(ub, bound), nodes=nodes,
                       iterations=iterations, trace=trace, wall_time=wall,
                       algorithm="oa")
