"""Microgrid design and dispatch optimization toolkit.

Equipment curve models, a generic MINLP representation, an in-house
solver suite (branch-and-bound, outer approximation, extended cutting
plane, exhaustive enumeration), scenario/result file handling, and a
batch CLI.
"""

__version__ = "0.1.0"

from .components import (
    BETZ_LIMIT, CHP_CO2_SHARE, ChpUnit, ConventionalGenerator,
    InstallCostCurve, PvArray, StorageUnit, WeatherSample, WindTurbine,
    chp_emission, chp_fuel_cost, chp_fuel_cost_grad, conv_emission,
    conv_emission_grad, conv_fuel_cost, conv_fuel_cost_grad, install_cost,
    install_cost_grad, pv_cell_temp, pv_power_physical, pv_power_piecewise,
    storage_step, storage_step_grad, wind_power_physical,
    wind_power_piecewise,
)
from .errors import (
    EnumerationGuardError, EvaluationError, InfeasibleModelError,
    MicrogridError, ModelWarning, NonconvexProblemError, NonsmoothPointError,
    SchemaError, ValidationError,
)
from .grid import (
    BuildOptions, CandidateUnit, DispatchSchedule, EquipmentCatalog,
    GridProblem, GridScenario, ObjectiveBreakdown, build_problem,
    evaluate_solution, extract_schedule, renewable_availability,
)
from .problem import (
    LinearConstraints, LinearCut, MinlpProblem, NonlinearConstraint,
    NonlinearTerm, ProblemBuilder, Relaxation, dump_problem, evaluate,
    gradient, linearize_constraint, relax,
)
from .solvers import (
    SolveResult, SolverConfig, branch_and_bound, enumerate_exhaustive,
    export_trace, extended_cutting_plane, outer_approximation, solve,
    solve_nlp_local,
)
