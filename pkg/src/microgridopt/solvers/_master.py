"""Mixed-integer linear master problem shared by OA and ECP.

The master keeps the original linear rows, bounds, and integrality, and
accumulates linearization cuts.  When the original objective carries a
nonlinear term, an epigraph variable is appended as the last column and
objective cuts take the form ``grad.z - eta <= grad.p - f(p)``.  The
epigraph variable's box is recomputed from the cuts themselves so every
master variable keeps finite bounds.
"""

from __future__ import annotations

import numpy as np

from ..problem import LinearConstraints, MinlpProblem


def _box_min(coeffs: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> float:
    return float(np.sum(np.minimum(coeffs * lb, coeffs * ub)))


def _box_max(coeffs: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> float:
    return float(np.sum(np.maximum(coeffs * lb, coeffs * ub)))


class MasterBuilder:
    def __init__(self, problem: MinlpProblem):
        self.problem = problem
        self.n = problem.n
        self.has_eta = problem.obj_nonlinear is not None
        self._cut_coeffs: list[np.ndarray] = []   # over z only
        self._cut_eta: list[float] = []           # coefficient on eta
        self._cut_rhs: list[float] = []
        self._cut_names: list[str] = []
        self._obj_cut_idx: list[int] = []

    def add_constraint_cut(self, coeffs: np.ndarray, rhs: float, name: str):
        self._cut_coeffs.append(np.asarray(coeffs, dtype=np.float64))
        self._cut_eta.append(0.0)
        self._cut_rhs.append(float(rhs))
        self._cut_names.append(name)

    def add_objective_cut(self, point: np.ndarray, fval: float,
                          grad: np.ndarray, name: str):
        """f(p) + grad.(z - p) <= eta, i.e. grad.z - eta <= grad.p - f(p)."""
        grad = np.asarray(grad, dtype=np.float64)
        self._cut_coeffs.append(grad)
        self._cut_eta.append(-1.0)
        self._cut_rhs.append(float(grad.dot(point) - fval))
        self._cut_names.append(name)
        self._obj_cut_idx.append(len(self._cut_rhs) - 1)

    def add_nogood(self, y_assignment: np.ndarray, name: str) -> bool:
        """Exclude one binary assignment; returns False when the integer
        variables are not all binary (no linear no-good exists then)."""
        p = self.problem
        idx = p.int_indices
        if len(idx) == 0:
            return False
        if np.any(p.lb[idx] < -1e-9) or np.any(p.ub[idx] > 1.0 + 1e-9):
            return False
        coeffs = np.zeros(self.n)
        ones = 0
        for j, yv in zip(idx, y_assignment):
            if yv >= 0.5:
                coeffs[j] = 1.0
                ones += 1
            else:
                coeffs[j] = -1.0
        self.add_constraint_cut(coeffs, float(ones - 1), name)
        return True

    @property
    def n_cuts(self) -> int:
        return len(self._cut_rhs)

    def build(self) -> MinlpProblem:
        p = self.problem
        n_total = self.n + (1 if self.has_eta else 0)
        lin = p.linear
        rows = list(lin.rows)
        cols = list(lin.cols)
        vals = list(lin.vals)
        rhs = list(lin.rhs)
        senses = list(lin.senses)
        names = list(lin.names)
        for k in range(self.n_cuts):
            r = len(rhs)
            coeffs = self._cut_coeffs[k]
            nz = np.flatnonzero(coeffs)
            rows.extend([r] * len(nz))
            cols.extend(nz.tolist())
            vals.extend(coeffs[nz].tolist())
            if self.has_eta and self._cut_eta[k] != 0.0:
                rows.append(r)
                cols.append(self.n)
                vals.append(self._cut_eta[k])
            rhs.append(self._cut_rhs[k])
            senses.append("le")
            names.append(self._cut_names[k])

        lb = list(p.lb)
        ub = list(p.ub)
        integ = list(p.integrality)
        var_names = list(p.var_names)
        obj = np.zeros(n_total)
        obj[:self.n] = p.obj_linear
        if self.has_eta:
            if not self._obj_cut_idx:
                raise ValueError("epigraph master needs one objective cut "
                                 "before it can be built")
            eta_lb = -np.inf
            eta_ub = -np.inf
            for k in self._obj_cut_idx:
                c = self._cut_coeffs[k]
                lo = _box_min(c, p.lb, p.ub) - self._cut_rhs[k]
                hi = _box_max(c, p.lb, p.ub) - self._cut_rhs[k]
                eta_lb = max(eta_lb, lo)
                eta_ub = max(eta_ub, hi)
            lb.append(eta_lb)
            ub.append(max(eta_ub, eta_lb))
            integ.append(False)
            var_names.append("_eta")
            obj[self.n] = 1.0

        master_lin = LinearConstraints(n_total, rows, cols, vals, rhs,
                                       senses, names)
        return MinlpProblem(
            name=f"{p.name}|master{self.n_cuts}",
            lb=lb, ub=ub, integrality=integ,
            obj_linear=obj, obj_constant=p.obj_constant,
            obj_nonlinear=None, linear=master_lin, nonlinear=(),
            var_names=var_names)
