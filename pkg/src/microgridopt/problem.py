"""Generic mixed-integer nonlinear program representation.

A problem holds one flat variable vector ``z`` with box bounds and an
integrality mask, an objective split into a linear part plus an optional
nonlinear term, linear constraints in sparse triplet form with a per-row
sense (``<=`` or ``==``), and a list of nonlinear inequality constraints
``g_i(z) <= 0`` carrying user-declared convexity flags.

Problems are immutable after construction; evaluation and gradient
calls are reentrant.  Cheap bound-modified copies (sharing all constraint
structure) support branch-and-bound without rebuilding matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError, EvaluationError

SENSE_LE = "le"
SENSE_EQ = "eq"

_FD_STEP = 1e-6


@dataclass(frozen=True)
class NonlinearTerm:
    """Nonlinear objective term with analytic gradient."""

    fun: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    convex: bool
    name: str = "nl_obj"


@dataclass(frozen=True)
class NonlinearConstraint:
    """One constraint ``fun(z) <= 0``.

    ``grad`` may be None for black-box constraints, in which case a
    central finite difference is used as fallback.
    """

    fun: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray] | None
    convex: bool
    name: str = "g"


class LinearConstraints:
    """Sparse-triplet linear constraint block ``A z (<=|==) rhs``."""

    def __init__(self, n_vars: int, rows, cols, vals, rhs, senses, names=None):
        self.n_vars = n_vars
        self.rows = np.asarray(rows, dtype=np.int64)
        self.cols = np.asarray(cols, dtype=np.int64)
        self.vals = np.asarray(vals, dtype=np.float64)
        self.rhs = np.asarray(rhs, dtype=np.float64)
        self.senses = list(senses)
        self.n_rows = len(self.rhs)
        self.names = list(names) if names is not None else [
            f"lin{i}" for i in range(self.n_rows)]
        if len(self.senses) != self.n_rows or len(self.names) != self.n_rows:
            raise DimensionMismatchError("senses/names length != row count")
        if self.n_rows:
            self.matrix = sp.csr_matrix(
                (self.vals, (self.rows, self.cols)),
                shape=(self.n_rows, n_vars))
        else:
            self.matrix = sp.csr_matrix((0, n_vars))
        self.eq_mask = np.array([s == SENSE_EQ for s in self.senses], dtype=bool)
        # Per-row scale for the scaled-residual norm.
        self.scale = np.maximum(1.0, np.abs(self.rhs))

    def residuals(self, z: np.ndarray) -> np.ndarray:
        """Raw signed values ``A z - rhs`` (violation is max(0, .) for
        <= rows and abs(.) for == rows)."""
        return self.matrix.dot(z) - self.rhs

    def violations(self, z: np.ndarray) -> np.ndarray:
        r = self.residuals(z)
        v = np.maximum(0.0, r)
        v[self.eq_mask] = np.abs(r[self.eq_mask])
        return v


@dataclass(frozen=True)
class Evaluation:
    """Everything :func:`evaluate` knows about one point."""

    objective: float
    linear_values: np.ndarray      # A z - rhs (signed)
    nonlinear_values: np.ndarray   # g_i(z)
    max_violation: float           # inf-norm of scaled residuals
    max_violation_raw: float       # inf-norm of raw residuals


@dataclass(frozen=True)
class Gradient:
    """Objective gradient and constraint Jacobians at one point."""

    objective: np.ndarray
    linear_jacobian: sp.csr_matrix
    nonlinear_jacobian: np.ndarray  # (n_nl, n) dense


@dataclass(frozen=True)
class LinearCut:
    """A linearized inequality ``coeffs . z <= rhs``."""

    coeffs: np.ndarray
    rhs: float
    name: str


class MinlpProblem:
    """Immutable MINLP instance; see module docstring for the layout."""

    def __init__(self, name, lb, ub, integrality, obj_linear, obj_constant=0.0,
                 obj_nonlinear: NonlinearTerm | None = None,
                 linear: LinearConstraints | None = None,
                 nonlinear: Sequence[NonlinearConstraint] = (),
                 var_names: Sequence[str] | None = None):
        self.name = name
        self.lb = np.asarray(lb, dtype=np.float64).copy()
        self.ub = np.asarray(ub, dtype=np.float64).copy()
        self.integrality = np.asarray(integrality, dtype=bool).copy()
        self.n = len(self.lb)
        if len(self.ub) != self.n or len(self.integrality) != self.n:
            raise DimensionMismatchError("bounds/integrality length mismatch")
        if not (np.all(np.isfinite(self.lb)) and np.all(np.isfinite(self.ub))):
            raise EvaluationError("every variable needs finite bounds")
        self.obj_linear = np.asarray(obj_linear, dtype=np.float64).copy()
        if len(self.obj_linear) != self.n:
            raise DimensionMismatchError("objective vector length mismatch")
        self.obj_constant = float(obj_constant)
        self.obj_nonlinear = obj_nonlinear
        self.linear = linear if linear is not None else LinearConstraints(
            self.n, [], [], [], [], [])
        if self.linear.n_vars != self.n:
            raise DimensionMismatchError("linear block has wrong column count")
        self.nonlinear = list(nonlinear)
        self.var_names = (list(var_names) if var_names is not None
                          else [f"z{i}" for i in range(self.n)])
        if len(self.var_names) != self.n:
            raise DimensionMismatchError("variable name list length mismatch")
        for arr in (self.lb, self.ub, self.integrality, self.obj_linear):
            arr.setflags(write=False)
        self.int_indices = np.flatnonzero(self.integrality)

    @property
    def n_int(self) -> int:
        return len(self.int_indices)

    @property
    def n_cont(self) -> int:
        return self.n - self.n_int

    @property
    def is_convex(self) -> bool:
        """True iff every nonlinear piece carries a convex flag."""
        if self.obj_nonlinear is not None and not self.obj_nonlinear.convex:
            return False
        return all(c.convex for c in self.nonlinear)

    def with_bounds(self, lb, ub, drop_integrality=False, name=None):
        """Cheap copy with new bounds, sharing all constraint structure."""
        out = object.__new__(MinlpProblem)
        out.__dict__.update(self.__dict__)
        out.lb = np.asarray(lb, dtype=np.float64).copy()
        out.ub = np.asarray(ub, dtype=np.float64).copy()
        out.lb.setflags(write=False)
        out.ub.setflags(write=False)
        if drop_integrality:
            out.integrality = np.zeros(self.n, dtype=bool)
            out.int_indices = np.flatnonzero(out.integrality)
        if name is not None:
            out.name = name
        return out

    def objective_value(self, z: np.ndarray) -> float:
        val = self.obj_constant + float(self.obj_linear.dot(z))
        if self.obj_nonlinear is not None:
            val += float(self.obj_nonlinear.fun(z))
        return val

    def objective_gradient(self, z: np.ndarray) -> np.ndarray:
        g = self.obj_linear.copy()
        if self.obj_nonlinear is not None:
            g = g + np.asarray(self.obj_nonlinear.grad(z), dtype=np.float64)
        return g

    def nonlinear_values(self, z: np.ndarray) -> np.ndarray:
        return np.array([c.fun(z) for c in self.nonlinear], dtype=np.float64)


def _check_point(problem: MinlpProblem, point) -> np.ndarray:
    z = np.asarray(point, dtype=np.float64)
    if z.shape != (problem.n,):
        raise DimensionMismatchError(
            f"point has shape {z.shape}, problem has {problem.n} variables")
    return z


def evaluate(problem: MinlpProblem, point) -> Evaluation:
    """Evaluate objective and all constraints at ``point``.

    Raises :class:`EvaluationError` if anything comes out non-finite.
    Scaled residuals divide each linear row by max(1, |rhs|); nonlinear
    rows and bound violations are used raw.
    """
    z = _check_point(problem, point)
    obj = problem.objective_value(z)
    lin = problem.linear.residuals(z)
    nl = problem.nonlinear_values(z)
    if not (np.isfinite(obj) and np.all(np.isfinite(lin)) and np.all(np.isfinite(nl))):
        raise EvaluationError(f"non-finite evaluation at point of {problem.name}")
    lin_viol = np.maximum(0.0, lin)
    lin_viol[problem.linear.eq_mask] = np.abs(lin[problem.linear.eq_mask])
    bound_viol = np.maximum(0.0, np.maximum(problem.lb - z, z - problem.ub))
    raw = 0.0
    scaled = 0.0
    if len(lin_viol):
        raw = float(np.max(lin_viol))
        scaled = float(np.max(lin_viol / problem.linear.scale))
    if len(nl):
        raw = max(raw, float(np.max(np.maximum(0.0, nl))))
        scaled = max(scaled, float(np.max(np.maximum(0.0, nl))))
    if len(bound_viol):
        bv = float(np.max(bound_viol))
        raw = max(raw, bv)
        scaled = max(scaled, bv)
    return Evaluation(objective=obj, linear_values=lin, nonlinear_values=nl,
                      max_violation=scaled, max_violation_raw=raw)


def _fd_gradient(fun, z: np.ndarray) -> np.ndarray:
    g = np.empty_like(z)
    for i in range(len(z)):
        h = _FD_STEP * max(1.0, abs(z[i]))
        zp = z.copy(); zp[i] += h
        zm = z.copy(); zm[i] -= h
        g[i] = (fun(zp) - fun(zm)) / (2.0 * h)
    return g


def gradient(problem: MinlpProblem, point) -> Gradient:
    """Objective gradient and constraint Jacobian at ``point``.

    Analytic gradients where declared; central finite differences for
    black-box nonlinear constraints without one.
    """
    z = _check_point(problem, point)
    obj_grad = problem.objective_gradient(z)
    nl_jac = np.zeros((len(problem.nonlinear), problem.n))
    for k, c in enumerate(problem.nonlinear):
        if c.grad is not None:
            nl_jac[k] = np.asarray(c.grad(z), dtype=np.float64)
        else:
            nl_jac[k] = _fd_gradient(c.fun, z)
    if not (np.all(np.isfinite(obj_grad)) and np.all(np.isfinite(nl_jac))):
        raise EvaluationError(f"non-finite gradient at point of {problem.name}")
    return Gradient(objective=obj_grad,
                    linear_jacobian=problem.linear.matrix,
                    nonlinear_jacobian=nl_jac)


class Relaxation:
    """Continuous relaxation of a problem over a tightened bound box.

    Dropping integrality can only grow the feasible set, so the optimum
    of ``self.problem`` is a valid lower bound for any integer-feasible
    point inside the same box.
    """

    def __init__(self, parent: MinlpProblem, problem: MinlpProblem):
        self.parent = parent
        self.problem = problem

    @property
    def empty(self) -> bool:
        return bool(np.any(self.problem.lb > self.problem.ub + 1e-12))


def relax(problem: MinlpProblem, lb=None, ub=None) -> Relaxation:
    """Drop integrality, optionally tightening bounds.

    ``lb``/``ub`` default to the problem's own bounds; they may only
    tighten (values outside the original box are clipped back in).  An
    empty bound box is reported through ``Relaxation.empty`` rather than
    raised, so search code can prune on it.
    """
    new_lb = problem.lb if lb is None else np.maximum(problem.lb, lb)
    new_ub = problem.ub if ub is None else np.minimum(problem.ub, ub)
    relaxed = problem.with_bounds(new_lb, new_ub, drop_integrality=True,
                                  name=f"{problem.name}|relaxed")
    return Relaxation(parent=problem, problem=relaxed)


def linearize_constraint(problem: MinlpProblem, i: int, point) -> LinearCut:
    """First-order cut of nonlinear constraint ``i`` at ``point``.

    Returns ``g(p) + grad(p).(z - p) <= 0`` rearranged to
    ``grad(p).z <= grad(p).p - g(p)``.  For convex ``g`` this never cuts
    a feasible point; for affine ``g`` it reproduces the constraint.
    """
    z = _check_point(problem, point)
    c = problem.nonlinear[i]
    gval = float(c.fun(z))
    ggrad = (np.asarray(c.grad(z), dtype=np.float64) if c.grad is not None
             else _fd_gradient(c.fun, z))
    if not (np.isfinite(gval) and np.all(np.isfinite(ggrad))):
        raise EvaluationError(f"non-finite linearization of {c.name}")
    return LinearCut(coeffs=ggrad, rhs=float(ggrad.dot(z) - gval),
                     name=f"cut[{c.name}]")


class ProblemBuilder:
    """Incremental assembly helper for :class:`MinlpProblem`."""

    def __init__(self, name: str):
        self.name = name
        self._names: list[str] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._int: list[bool] = []
        self._obj: dict[int, float] = {}
        self.obj_constant = 0.0
        self.obj_nonlinear: NonlinearTerm | None = None
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._rhs: list[float] = []
        self._senses: list[str] = []
        self._row_names: list[str] = []
        self.nonlinear: list[NonlinearConstraint] = []

    @property
    def n_vars(self) -> int:
        return len(self._names)

    def add_var(self, name: str, lb: float, ub: float,
                integer: bool = False, obj: float = 0.0) -> int:
        idx = len(self._names)
        self._names.append(name)
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._int.append(bool(integer))
        if obj:
            self._obj[idx] = self._obj.get(idx, 0.0) + float(obj)
        return idx

    def add_obj(self, idx: int, coef: float):
        if coef:
            self._obj[idx] = self._obj.get(idx, 0.0) + float(coef)

    def add_row(self, terms: Sequence[tuple[int, float]], sense: str,
                rhs: float, name: str) -> int:
        row = len(self._rhs)
        for col, coef in terms:
            if coef:
                self._rows.append(row)
                self._cols.append(col)
                self._vals.append(float(coef))
        self._rhs.append(float(rhs))
        self._senses.append(sense)
        self._row_names.append(name)
        return row

    def add_nonlinear(self, constraint: NonlinearConstraint):
        self.nonlinear.append(constraint)

    def build(self) -> MinlpProblem:
        n = self.n_vars
        obj = np.zeros(n)
        for idx, coef in self._obj.items():
            obj[idx] = coef
        lin = LinearConstraints(n, self._rows, self._cols, self._vals,
                                self._rhs, self._senses, self._row_names)
        return MinlpProblem(
            name=self.name, lb=self._lb, ub=self._ub, integrality=self._int,
            obj_linear=obj, obj_constant=self.obj_constant,
            obj_nonlinear=self.obj_nonlinear, linear=lin,
            nonlinear=self.nonlinear, var_names=self._names)


def dump_problem(problem: MinlpProblem) -> str:
    """Plain-text dump of a problem for debugging and golden tests.

    Stable line-oriented layout (one record per line, fields space
    separated, floats via repr):

        minlp-dump v1
        name <problem name>
        vars <count>
        var <idx> <name> <lb> <ub> <int|cont>
        obj constant <value>
        obj linear <idx> <coef>            # nonzeros only, by index
        obj nonlinear <name> <convex|nonconvex>   # only if present
        row <idx> <name> <le|eq> <rhs>
        term <row> <col> <coef>            # sorted by (row, col)
        nl <idx> <name> <convex|nonconvex>
        end
    """
    out = ["minlp-dump v1", f"name {problem.name}", f"vars {problem.n}"]
    for i in range(problem.n):
        kind = "int" if problem.integrality[i] else "cont"
        out.append(f"var {i} {problem.var_names[i]} "
                   f"{problem.lb[i]!r} {problem.ub[i]!r} {kind}")
    out.append(f"obj constant {problem.obj_constant!r}")
    for i in np.flatnonzero(problem.obj_linear):
        out.append(f"obj linear {i} {problem.obj_linear[i]!r}")
    if problem.obj_nonlinear is not None:
        flag = "convex" if problem.obj_nonlinear.convex else "nonconvex"
        out.append(f"obj nonlinear {problem.obj_nonlinear.name} {flag}")
    lin = problem.linear
    for r in range(lin.n_rows):
        out.append(f"row {r} {lin.names[r]} {lin.senses[r]} {lin.rhs[r]!r}")
    order = np.lexsort((lin.cols, lin.rows))
    for k in order:
        out.append(f"term {lin.rows[k]} {lin.cols[k]} {lin.vals[k]!r}")
    for i, c in enumerate(problem.nonlinear):
        flag = "convex" if c.convex else "nonconvex"
        out.append(f"nl {i} {c.name} {flag}")
    out.append("end")
    return "\n".join(out) + "\n"
