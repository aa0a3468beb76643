"""NLP-based branch-and-bound for mixed-integer nonlinear programs.

Each node solves the continuous relaxation over its bound box, giving a
valid lower bound for the subtree.  Integral relaxation optima become
incumbents (re-solved with the integers pinned, so incumbents carry
exactly integral coordinates and tightly feasible continuous ones);
fractional ones branch on floor/ceil of the chosen variable.  Node
selection is best-bound, branching most-fractional, both with
lowest-index tie breaking, which makes runs bit-reproducible.

On problems flagged nonconvex the relaxations are only solved to local
optimality (seeded multistart), so bounds and the final result are
labeled heuristic rather than global.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..problem import MinlpProblem, relax
from .config import (SolveResult, SolverConfig, TraceRecord, relative_gap,
                     STATUS_FEASIBLE, STATUS_INFEASIBLE, STATUS_LIMIT,
                     STATUS_OPTIMAL)
from .localnlp import solve_nlp_local


@dataclass(order=True)
class _HeapItem:
    bound: float
    node_id: int
    node: "_Node" = field(compare=False)


@dataclass
class _Node:
    node_id: int
    parent_id: int
    depth: int
    lb: np.ndarray
    ub: np.ndarray
    bound: float
    point: np.ndarray
    multipliers: tuple | None


def _pick_branch_var(frac: np.ndarray, int_indices: np.ndarray,
                     int_tol: float, rule: str) -> int:
    """Index (into the full variable vector) of the variable to branch on."""
    cand = np.flatnonzero(frac > int_tol)
    if rule == "lowest-index":
        return int(int_indices[cand[0]])
    # most-fractional: distance to nearest integer, ties to lowest index
    best = cand[np.argmax(frac[cand])]
    return int(int_indices[best])


def branch_and_bound(problem: MinlpProblem,
                     config: SolverConfig | None = None,
                     root_start=None, root_warm=None) -> SolveResult:
    """``root_start``/``root_warm`` seed the root relaxation solve (used
    by OA/ECP to warm-start successive masters); results are identical
    either way, only iteration counts change."""
    config = config or SolverConfig()
    t0 = time.monotonic()
    trace: list[TraceRecord] = []
    convex = problem.is_convex
    int_idx = problem.int_indices

    incumbent: np.ndarray | None = None
    incumbent_obj = math.inf
    resolved_bound_min = math.inf   # min bound over pruned/resolved subtrees
    nodes_created = 0
    nodes_processed = 0
    hit_limit = False

    def scale() -> float:
        return max(1.0, abs(incumbent_obj)) if np.isfinite(incumbent_obj) else 1.0

    root_rel = relax(problem)
    if root_rel.empty:
        return SolveResult(status=STATUS_INFEASIBLE, x=None,
                           objective=math.inf, bound=math.inf, gap=0.0,
                           algorithm="bb", wall_time=time.monotonic() - t0)
    root_res = solve_nlp_local(root_rel.problem, config=config,
                               start=root_start, warm_multipliers=root_warm)
    nodes_created += 1
    if root_res.status == "infeasible":
        trace.append(TraceRecord(0, -1, 0, math.inf, "prune-infeasible"))
        return SolveResult(status=STATUS_INFEASIBLE, x=None,
                           objective=math.inf, bound=math.inf, gap=0.0,
                           nodes=1, trace=trace, algorithm="bb",
                           wall_time=time.monotonic() - t0)
    root_bound = root_res.objective if root_res.ok else -math.inf
    trace.append(TraceRecord(0, -1, 0, root_bound, "relaxed"))
    root = _Node(0, -1, 0, problem.lb.copy(), problem.ub.copy(),
                 root_bound, root_res.x, root_res.multipliers)
    heap: list[_HeapItem] = [_HeapItem(root.bound, 0, root)]

    while heap:
        if nodes_processed >= config.node_limit or \
                time.monotonic() - t0 > config.time_limit:
            hit_limit = True
            break
        item = heapq.heappop(heap)
        node = item.node
        if node.bound >= incumbent_obj - config.gap_tol * scale():
            # best-bound order: every remaining node is at least as bad
            resolved_bound_min = min(resolved_bound_min, node.bound)
            trace.append(TraceRecord(node.node_id, node.parent_id, node.depth,
                                     node.bound, "prune-bound"))
            break
        nodes_processed += 1

        y = node.point[int_idx]
        frac = np.abs(y - np.round(y))
        if len(int_idx) == 0 or np.all(frac <= config.int_tol):
            # Integral relaxation: the subtree optimum equals this bound.
            # Re-solve with integers pinned for a clean incumbent point.
            y_int = np.round(y)
            fix_lb = node.lb.copy()
            fix_ub = node.ub.copy()
            fix_lb[int_idx] = y_int
            fix_ub[int_idx] = y_int
            fix_res = solve_nlp_local(
                relax(problem, fix_lb, fix_ub).problem, start=node.point,
                config=config, warm_multipliers=node.multipliers)
            resolved_bound_min = min(resolved_bound_min, node.bound)
            cand_obj = math.inf
            cand_x = None
            if fix_res.status != "infeasible" and \
                    fix_res.feasibility <= 10.0 * config.feas_tol:
                cand_obj, cand_x = fix_res.objective, fix_res.x.copy()
            if cand_x is not None and cand_obj < incumbent_obj:
                cand_x[int_idx] = y_int
                incumbent, incumbent_obj = cand_x, cand_obj
                trace.append(TraceRecord(node.node_id, node.parent_id,
                                         node.depth, node.bound, "incumbent",
                                         value=cand_obj))
            else:
                trace.append(TraceRecord(node.node_id, node.parent_id,
                                         node.depth, node.bound, "integral"))
            continue

        j = _pick_branch_var(frac, int_idx, config.int_tol, config.branching)
        vj = node.point[j]
        trace.append(TraceRecord(node.node_id, node.parent_id, node.depth,
                                 node.bound, "branch", var=j, value=vj))
        for side in ("down", "up"):
            child_lb = node.lb.copy()
            child_ub = node.ub.copy()
            if side == "down":
                child_ub[j] = math.floor(vj)
            else:
                child_lb[j] = math.ceil(vj)
            nodes_created += 1
            cid = nodes_created - 1
            child_rel = relax(problem, child_lb, child_ub)
            if child_rel.empty:
                trace.append(TraceRecord(cid, node.node_id, node.depth + 1,
                                         math.inf, "prune-empty", var=j))
                continue
            start = np.clip(node.point, child_lb, child_ub)
            res = solve_nlp_local(child_rel.problem, start=start,
                                  config=config,
                                  warm_multipliers=node.multipliers)
            if res.status == "infeasible":
                trace.append(TraceRecord(cid, node.node_id, node.depth + 1,
                                         math.inf, "prune-infeasible", var=j))
                continue
            child_bound = res.objective if res.ok else node.bound
            child_bound = max(child_bound, node.bound)
            if child_bound >= incumbent_obj - config.gap_tol * scale():
                resolved_bound_min = min(resolved_bound_min, child_bound)
                trace.append(TraceRecord(cid, node.node_id, node.depth + 1,
                                         child_bound, "prune-bound", var=j))
                continue
            trace.append(TraceRecord(cid, node.node_id, node.depth + 1,
                                     child_bound, "relaxed", var=j))
            heapq.heappush(heap, _HeapItem(
                child_bound, cid,
                _Node(cid, node.node_id, node.depth + 1, child_lb, child_ub,
                      child_bound, res.x, res.multipliers)))

    open_bound = min((it.bound for it in heap), default=math.inf)
    bound = min(incumbent_obj, resolved_bound_min, open_bound)
    wall = time.monotonic() - t0

    if incumbent is None:
        if hit_limit:
            return SolveResult(status=STATUS_LIMIT, x=None, objective=math.inf,
                               bound=bound, gap=math.inf, nodes=nodes_created,
                               trace=trace, wall_time=wall, algorithm="bb")
        return SolveResult(status=STATUS_INFEASIBLE, x=None,
                           objective=math.inf, bound=math.inf, gap=0.0,
                           nodes=nodes_created, trace=trace, wall_time=wall,
                           algorithm="bb")

    gap = relative_gap(incumbent_obj, bound)
    if hit_limit and gap > config.gap_tol:
        status = STATUS_LIMIT
    elif convex and gap <= config.gap_tol:
        status = STATUS_OPTIMAL
    else:
        status = STATUS_FEASIBLE
    return SolveResult(
        status=status, x=incumbent, objective=incumbent_obj, bound=bound,
        gap=gap, nodes=nodes_created, iterations=nodes_processed,
        trace=trace, wall_time=wall, algorithm="bb",
        certificate="global" if convex else "local-heuristic",
        root_warm=root_res.multipliers)
