"""Local solver for continuous nonlinear programs with box bounds.

Method: safeguarded augmented Lagrangian over the linear and nonlinear
constraints, with a spectral projected-gradient (Barzilai-Borwein step,
nonmonotone Armijo line search) inner loop handling the box.  Linear
rows are normalized by their largest coefficient before entering the
penalty so badly scaled models do not stall the multiplier updates.

Infeasible subproblems are certified through a separate feasibility
phase minimizing the squared violation.  Every constraint this package
assembles is convex (only objectives go nonconvex), so a converged
stationary point of that phase with residual above tolerance is a real
infeasibility certificate; a non-converged phase never certifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from ..errors import EvaluationError
from ..problem import MinlpProblem
from .config import SolverConfig

_RHO_MAX = 1e12
_MULT_MAX = 1e10


@dataclass
class LocalResult:
    status: str              # "optimal" | "limit" | "infeasible"
    x: np.ndarray
    objective: float
    kkt_residual: float
    feasibility: float       # raw inf-norm constraint violation
    iterations: int          # total inner iterations
    multipliers: Optional[tuple] = None   # (lam_eq, mu_ineq, rho) warm-start

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


class _ConstraintCache:
    """Row-normalized constraint data shared across one solve."""

    def __init__(self, problem: MinlpProblem):
        self.problem = problem
        lin = problem.linear
        eq = lin.eq_mask
        A = lin.matrix
        self.A_eq = A[eq]
        self.A_in = A[~eq]
        b_eq = lin.rhs[eq]
        b_in = lin.rhs[~eq]
        self.s_eq = self._row_scales(self.A_eq)
        self.s_in = self._row_scales(self.A_in)
        self.A_eq = self._scale_rows(self.A_eq, self.s_eq)
        self.A_in = self._scale_rows(self.A_in, self.s_in)
        self.b_eq = b_eq / self.s_eq
        self.b_in = b_in / self.s_in
        self.A_eq_T = self.A_eq.T.tocsr()
        self.A_in_T = self.A_in.T.tocsr()
        self.nl = problem.nonlinear
        self.n_eq = self.A_eq.shape[0]
        self.n_in = self.A_in.shape[0] + len(self.nl)

    @staticmethod
    def _row_scales(A):
        if A.shape[0] == 0:
            return np.ones(0)
        mags = np.abs(A).max(axis=1).toarray().ravel()
        return np.maximum(mags, 1.0)

    @staticmethod
    def _scale_rows(A, scales):
        if A.shape[0] == 0:
            return A
        return (sp.diags(1.0 / scales) @ A).tocsr()

    def residuals(self, z):
        """(r_eq, r_in) in normalized units; r_in stacks linear rows then
        nonlinear constraint values."""
        r_eq = self.A_eq.dot(z) - self.b_eq
        r_lin = self.A_in.dot(z) - self.b_in
        if self.nl:
            r_nl = np.array([c.fun(z) for c in self.nl])
            return r_eq, np.concatenate([r_lin, r_nl])
        return r_eq, r_lin

    def ineq_jacobian_t_dot(self, z, w):
        n_lin = self.A_in.shape[0]
        out = self.A_in_T.dot(w[:n_lin])
        for k, c in enumerate(self.nl):
            wk = w[n_lin + k]
            if wk != 0.0:
                out = out + wk * np.asarray(c.grad(z), dtype=np.float64)
        return out

    def raw_violation(self, z):
        """Inf-norm violation in ORIGINAL row units."""
        r_eq, r_in = self.residuals(z)
        v = 0.0
        if len(r_eq):
            v = float(np.max(np.abs(r_eq) * self.s_eq))
        n_lin = self.A_in.shape[0]
        if n_lin:
            v = max(v, float(np.max(np.maximum(0.0, r_in[:n_lin]) * self.s_in)))
        if self.nl:
            v = max(v, float(np.max(np.maximum(0.0, r_in[n_lin:]))))
        return v


def _spg(value, value_and_grad, z, lb, ub, tol, max_iter):
    """Spectral projected gradient over a box.

    Returns (z, f, g, iters, converged); stops on the projected-gradient
    norm, the iteration cap, or stagnation (no movement and no descent).
    """
    z = np.clip(z, lb, ub)
    f, g = value_and_grad(z)
    if not np.isfinite(f):
        return z, f, g, 0, False
    gmax = float(np.max(np.abs(g))) if len(g) else 0.0
    alpha = 1.0 / max(gmax, 1e-8)
    hist = [f]
    stagnant = 0
    it = 0
    while it < max_iter:
        pg = float(np.max(np.abs(np.clip(z - g, lb, ub) - z))) if len(z) else 0.0
        if pg <= tol:
            return z, f, g, it, True
        d = np.clip(z - alpha * g, lb, ub) - z
        gd = float(g.dot(d))
        if gd >= 0.0:
            alpha = max(alpha * 1e-4, 1e-16)
            d = np.clip(z - alpha * g, lb, ub) - z
            gd = float(g.dot(d))
            if gd >= 0.0:
                return z, f, g, it, True
        fref = max(hist)
        step = 1.0
        f_trial = value(z + d)
        ls = 0
        # NaN-safe: anything not provably acceptable shrinks the step
        while not (f_trial <= fref + 1e-4 * step * gd) and ls < 25:
            denom = 2.0 * (f_trial - f - step * gd)
            cand = -gd * step * step / denom if denom > 0 else 0.5 * step
            step = min(max(cand, 0.1 * step), 0.5 * step)
            f_trial = value(z + step * d)
            ls += 1
        z_new = z + step * d
        f_new, g_new = value_and_grad(z_new)
        moved = float(np.max(np.abs(z_new - z))) if len(z) else 0.0
        if moved <= 1e-15 * max(1.0, float(np.max(np.abs(z)))) and \
                f_new >= f - 1e-16 * max(1.0, abs(f)):
            stagnant += 1
            if stagnant >= 5:
                return z_new, f_new, g_new, it + 1, False
        else:
            stagnant = 0
        s = z_new - z
        y = g_new - g
        sy = float(s.dot(y))
        ss = float(s.dot(s))
        if sy > 1e-16 * max(ss, 1e-16):
            alpha = min(1e10, max(1e-12, ss / sy))
        else:
            alpha = min(1e10, alpha * 10.0)
        z, f, g = z_new, f_new, g_new
        hist.append(f)
        if len(hist) > 10:
            hist.pop(0)
        it += 1
    return z, f, g, it, False


def _feasibility_phase(cache: _ConstraintCache, z0, lb, ub, inner_limit):
    """Minimize 0.5*(||r_eq||^2 + ||max(0, r_in)||^2) over the box.

    Returns (point, iterations, converged)."""

    def value(z):
        r_eq, r_in = cache.residuals(z)
        rp = np.maximum(0.0, r_in)
        return 0.5 * (float(r_eq.dot(r_eq)) + float(rp.dot(rp)))

    def value_and_grad(z):
        r_eq, r_in = cache.residuals(z)
        rp = np.maximum(0.0, r_in)
        val = 0.5 * (float(r_eq.dot(r_eq)) + float(rp.dot(rp)))
        g = cache.A_eq_T.dot(r_eq) + cache.ineq_jacobian_t_dot(z, rp)
        return val, g

    z, _, _, iters, conv = _spg(value, value_and_grad, z0, lb, ub,
                                tol=1e-11, max_iter=inner_limit)
    return z, iters, conv


def _auglag_single(problem: MinlpProblem, cache: _ConstraintCache,
                   start: np.ndarray, config: SolverConfig,
                   warm_multipliers=None) -> LocalResult:
    lb, ub = problem.lb, problem.ub
    z = np.clip(np.asarray(start, dtype=np.float64), lb, ub)
    n_eq, n_in = cache.n_eq, cache.n_in
    rho_warm = None
    if warm_multipliers is not None and \
            len(warm_multipliers[0]) == n_eq and \
            len(warm_multipliers[1]) <= n_in:
        # rows are only ever appended, so shorter inequality-multiplier
        # vectors (older master without the newest cuts) pad with zeros
        lam = np.array(warm_multipliers[0], dtype=np.float64, copy=True)
        mu = np.zeros(n_in)
        mu[:len(warm_multipliers[1])] = warm_multipliers[1]
        if len(warm_multipliers) > 2:
            rho_warm = float(warm_multipliers[2])
    else:
        lam, mu = np.zeros(n_eq), np.zeros(n_in)

    f0 = problem.objective_value(z)
    if not np.isfinite(f0):
        raise EvaluationError("objective non-finite at start point")

    feas_target = min(1e-8, 0.01 * config.feas_tol)
    grad_scale = max(1.0, float(np.max(np.abs(problem.objective_gradient(z)))))
    stat_floor = 1e-9 * grad_scale
    stat_accept = 1e-6 * grad_scale

    if rho_warm is not None:
        rho = min(max(rho_warm, 1.0), _RHO_MAX)
    else:
        r_eq0, r_in0 = cache.residuals(z)
        viol0 = math.sqrt(
            float(r_eq0.dot(r_eq0))
            + float(np.maximum(0.0, r_in0).dot(np.maximum(0.0, r_in0))))
        rho = min(1e4, max(1.0, 10.0 * max(1.0, abs(f0)) / max(1.0, viol0 ** 2)))

    budget = 12 * config.nlp_inner_limit
    total_inner = 0
    best_v = math.inf
    stalled = 0
    feas_checked = False
    # warm-started solves skip the loose head of the tolerance schedule
    tol_offset = 6 if rho_warm is not None else 0

    def finalize(status):
        raw = cache.raw_violation(z)
        if status == "optimal" and raw > 10.0 * config.feas_tol:
            status = "limit"
        return LocalResult(status=status, x=z,
                           objective=problem.objective_value(z),
                           kkt_residual=raw, feasibility=raw,
                           iterations=total_inner,
                           multipliers=(lam, mu, rho))

    for outer in range(config.nlp_outer_limit):
        if total_inner >= budget:
            break

        def al_value(zz, lam=lam, mu=mu, rho=rho):
            r_eq, r_in = cache.residuals(zz)
            t = np.maximum(0.0, mu + rho * r_in)
            val = problem.objective_value(zz)
            if n_eq:
                val += float(lam.dot(r_eq)) + 0.5 * rho * float(r_eq.dot(r_eq))
            if n_in:
                val += (float(t.dot(t)) - float(mu.dot(mu))) / (2.0 * rho)
            return val

        def al_value_and_grad(zz, lam=lam, mu=mu, rho=rho):
            r_eq, r_in = cache.residuals(zz)
            t = np.maximum(0.0, mu + rho * r_in)
            val = problem.objective_value(zz)
            g = problem.objective_gradient(zz)
            if n_eq:
                val += float(lam.dot(r_eq)) + 0.5 * rho * float(r_eq.dot(r_eq))
                g = g + cache.A_eq_T.dot(lam + rho * r_eq)
            if n_in:
                val += (float(t.dot(t)) - float(mu.dot(mu))) / (2.0 * rho)
                g = g + cache.ineq_jacobian_t_dot(zz, t)
            return val, g

        inner_tol = max(stat_floor,
                        1e-3 * grad_scale * (0.2 ** (outer + tol_offset)))
        cap = min(config.nlp_inner_limit, budget - total_inner)
        z, _, _, inner_iters, _ = _spg(al_value, al_value_and_grad, z, lb, ub,
                                       tol=inner_tol, max_iter=cap)
        total_inner += inner_iters

        r_eq, r_in = cache.residuals(z)
        v = 0.0
        if n_eq:
            v = float(np.max(np.abs(r_eq)))
        if n_in:
            v = max(v, float(np.max(np.maximum(0.0, r_in))))

        lam = np.clip(lam + rho * r_eq, -_MULT_MAX, _MULT_MAX)
        mu = np.clip(np.maximum(0.0, mu + rho * r_in), 0.0, _MULT_MAX)

        gL = problem.objective_gradient(z)
        if n_eq:
            gL = gL + cache.A_eq_T.dot(lam)
        if n_in:
            gL = gL + cache.ineq_jacobian_t_dot(z, mu)
        pg = float(np.max(np.abs(np.clip(z - gL, lb, ub) - z))) if len(z) else 0.0

        if v <= feas_target and pg <= max(stat_accept, inner_tol):
            raw = cache.raw_violation(z)
            return LocalResult(
                status="optimal", x=z, objective=problem.objective_value(z),
                kkt_residual=max(raw, pg / grad_scale), feasibility=raw,
                iterations=total_inner, multipliers=(lam, mu, rho))

        if v > 0.25 * best_v:
            rho = min(rho * 10.0, _RHO_MAX)
            stalled += 1
        else:
            stalled = 0
        best_v = min(best_v, v)

        # Feasibility screen: once the penalty is heavy and progress has
        # stalled, certify or refute feasibility directly.  Only a
        # CONVERGED phase refutes; a capped one never prunes anything.
        if v > feas_target and stalled >= 2 and rho >= 1e6 and \
                not feas_checked:
            z_f, it_f, conv_f = _feasibility_phase(
                cache, z, lb, ub, min(config.nlp_inner_limit,
                                      max(200, budget - total_inner)))
            total_inner += it_f
            raw_f = cache.raw_violation(z_f)
            feas_checked = True
            if conv_f and raw_f > 10.0 * config.feas_tol:
                return LocalResult(
                    status="infeasible", x=z_f, objective=float("inf"),
                    kkt_residual=raw_f, feasibility=raw_f,
                    iterations=total_inner, multipliers=(lam, mu, rho))
            if raw_f < cache.raw_violation(z):
                z = np.asarray(z_f)
            stalled = 0

    # Budget or outer limit exhausted: settle feasibility honestly.
    raw = cache.raw_violation(z)
    if raw > 10.0 * config.feas_tol:
        z_f, it_f, conv_f = _feasibility_phase(cache, z, lb, ub,
                                               config.nlp_inner_limit)
        total_inner += it_f
        raw_f = cache.raw_violation(z_f)
        if conv_f and raw_f > 10.0 * config.feas_tol:
            return LocalResult(status="infeasible", x=z_f,
                               objective=float("inf"), kkt_residual=raw_f,
                               feasibility=raw_f, iterations=total_inner,
                               multipliers=(lam, mu, rho))
        if raw_f <= raw:
            z = np.asarray(z_f)
        return finalize("limit")
    return finalize("optimal" if raw <= config.feas_tol else "limit")


def solve_nlp_local(problem: MinlpProblem, start=None,
                    config: SolverConfig | None = None,
                    warm_multipliers=None,
                    force_multistart: bool | None = None) -> LocalResult:
    """Solve the continuous relaxation of ``problem`` locally.

    Integrality flags are ignored (callers relax or fix them through
    bounds).  On problems flagged nonconvex a seeded multistart over the
    box is run and the best feasible point returned; convex problems use
    a single start.  Returns a point with KKT residual at most ten times
    the feasibility tolerance, or a "limit"/"infeasible" status.
    """
    config = config or SolverConfig()
    lb, ub = problem.lb, problem.ub
    if np.any(lb > ub + 1e-12):
        return LocalResult(status="infeasible", x=lb.copy(),
                           objective=float("inf"),
                           kkt_residual=float("inf"),
                           feasibility=float("inf"), iterations=0)
    cache = _ConstraintCache(problem)

    base = (np.clip(np.asarray(start, dtype=np.float64), lb, ub)
            if start is not None else 0.5 * (lb + ub))
    multistart = force_multistart if force_multistart is not None \
        else not problem.is_convex
    starts = [base]
    if multistart and config.multistart > 1:
        rng = np.random.default_rng(config.seed)
        width = ub - lb
        for _ in range(config.multistart - 1):
            starts.append(lb + rng.random(problem.n) * width)

    best: LocalResult | None = None
    for s in starts:
        res = _auglag_single(problem, cache, s, config,
                             warm_multipliers=warm_multipliers)
        if best is None:
            best = res
            continue
        res_feas = res.feasibility <= 10.0 * config.feas_tol
        best_feas = best.feasibility <= 10.0 * config.feas_tol
        if res_feas and (not best_feas or res.objective < best.objective):
            best = res
        elif not res_feas and not best_feas and res.feasibility < best.feasibility:
            best = res
    return best
