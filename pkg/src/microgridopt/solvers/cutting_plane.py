"""Extended cutting plane for convex MINLPs.

Master-only iteration: solve the mixed-integer linear outer
approximation, linearize the single most-violated nonlinear piece at the
master optimum, repeat until the worst violation drops below the
feasibility tolerance.  No continuous subproblems are solved, so the
answer is the final master optimum (feasible to within ``feas_tol``).

Same refusal rule as outer approximation: nonconvex flags are a hard
error because a cut through a nonconvex region can discard the optimum.
"""

from __future__ import annotations

import math
import time

import numpy as np

from ..problem import MinlpProblem, linearize_constraint
from ._master import MasterBuilder
from .branch_bound import branch_and_bound
from .config import (SolveResult, SolverConfig, TraceRecord,
                     STATUS_INFEASIBLE, STATUS_LIMIT, STATUS_OPTIMAL)
from .outer_approx import _master_config, _require_convex


def extended_cutting_plane(problem: MinlpProblem,
                           config: SolverConfig | None = None) -> SolveResult:
    config = config or SolverConfig()
    _require_convex(problem, "extended cutting plane")
    t0 = time.monotonic()
    trace: list[TraceRecord] = []

    if problem.obj_nonlinear is None and not problem.nonlinear:
        res = branch_and_bound(problem, config)
        res.algorithm = "ecp"
        res.iterations = 1
        return res

    builder = MasterBuilder(problem)
    if builder.has_eta:
        # bootstrap linearization so the epigraph variable has a box
        mid = 0.5 * (problem.lb + problem.ub)
        f = float(problem.obj_nonlinear.fun(mid))
        g = np.asarray(problem.obj_nonlinear.grad(mid), dtype=np.float64)
        builder.add_objective_cut(mid, f, g, "objcut[init]")

    nodes = 0
    status = STATUS_LIMIT
    objective = math.inf
    point: np.ndarray | None = None
    iterations = 0
    warm_start = None
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
            return SolveResult(status=STATUS_INFEASIBLE, x=None,
                               objective=math.inf, bound=math.inf, gap=0.0,
                               nodes=nodes, iterations=it, trace=trace,
                               wall_time=time.monotonic() - t0,
                               algorithm="ecp")
        if mres.x is None:
            break
        z = mres.x[:problem.n]
        objective = mres.objective
        point = z

        # violation pool: nonlinear constraints plus the objective epigraph
        viols = [float(c.fun(z)) for c in problem.nonlinear]
        labels = list(range(len(problem.nonlinear)))
        if builder.has_eta:
            eta = mres.x[problem.n]
            viols.append(float(problem.obj_nonlinear.fun(z)) - eta)
            labels.append(-1)
        worst = int(np.argmax(viols))
        max_viol = viols[worst]
        trace.append(TraceRecord(it, -1, 0, mres.objective, "master",
                                 var=labels[worst], value=max_viol))
        if max_viol <= config.feas_tol:
            status = STATUS_OPTIMAL
            break
        if labels[worst] == -1:
            f = float(problem.obj_nonlinear.fun(z))
            g = np.asarray(problem.obj_nonlinear.grad(z), dtype=np.float64)
            builder.add_objective_cut(z, f, g, f"objcut[it{it}]")
        else:
            cut = linearize_constraint(problem, labels[worst], z)
            builder.add_constraint_cut(cut.coeffs, cut.rhs,
                                       f"{cut.name}[it{it}]")
        trace.append(TraceRecord(it, -1, 0, mres.objective, "cut",
                                 var=labels[worst]))

    wall = time.monotonic() - t0
    if point is None:
        return SolveResult(status=STATUS_LIMIT, x=None, objective=math.inf,
                           bound=-math.inf, gap=math.inf, nodes=nodes,
                           iterations=iterations, trace=trace,
                           wall_time=wall, algorithm="ecp")
    return SolveResult(status=status, x=point, objective=objective,
                       bound=objective, gap=0.0, nodes=nodes,
                       iterations=iterations, trace=trace, wall_time=wall,
                       algorithm="ecp")
