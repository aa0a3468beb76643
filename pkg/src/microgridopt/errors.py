"""Exception types and validation error codes shared across the package.

Every domain-type invariant maps to a distinct error code so that loaders
and tests can pin down exactly which rule was broken.  Soft invariants
(parameter ranges that are suspicious but not fatal) are emitted as
``ModelWarning`` instead.
"""

from __future__ import annotations


class MicrogridError(Exception):
    """Base class for all package errors."""


class ValidationError(MicrogridError):
    """An input value violates a domain-type invariant.

    Attributes:
        code: stable machine-readable error code (``E_*``).
        field_path: dotted path to the offending field, e.g.
            ``catalog[2].power.min`` when the error came from a file load,
            or the constructor argument name otherwise.
    """

    def __init__(self, code: str, field_path: str, message: str):
        self.code = code
        self.field_path = field_path
        super().__init__(f"{code} at {field_path}: {message}")


class SchemaError(ValidationError):
    """A scenario/result document failed structural validation."""


class EvaluationError(MicrogridError):
    """A model evaluation produced a non-finite value."""


class NonsmoothPointError(MicrogridError):
    """A gradient was requested at a kink with smoothing disabled."""


class DimensionMismatchError(MicrogridError):
    """An assignment or point has the wrong length for its problem."""


class InfeasibleModelError(MicrogridError):
    """The model is structurally infeasible at build time."""


class NonconvexProblemError(MicrogridError):
    """A convexity-requiring solver was asked to run on a flagged
    nonconvex problem.  Deliberately a hard error, never a warning."""


class EnumerationGuardError(MicrogridError):
    """The exhaustive oracle was asked for more integer assignments than
    its safety guard allows."""


class ModelWarning(UserWarning):
    """Suspicious-but-legal parameter value (soft invariant)."""


# Validation error codes, one per hard invariant.  Grouped by owning type.
E_COST_CURVE_KIND = "E_COST_CURVE_KIND"
E_COST_CURVE_NEGATIVE = "E_COST_CURVE_NEGATIVE"

E_CHP_P_RANGE = "E_CHP_P_RANGE"
E_CHP_H_RANGE = "E_CHP_H_RANGE"
E_CHP_POLYGON = "E_CHP_POLYGON"
E_CHP_RATIO = "E_CHP_RATIO"

E_CONV_P_RANGE = "E_CONV_P_RANGE"
E_CONV_EF_NEG = "E_CONV_EF_NEG"

E_PV_RADIATION_KNOTS = "E_PV_RADIATION_KNOTS"

E_WIND_SPEED_ORDER = "E_WIND_SPEED_ORDER"
E_WIND_CP_BETZ = "E_WIND_CP_BETZ"

E_STORAGE_ETA = "E_STORAGE_ETA"
E_STORAGE_X0 = "E_STORAGE_X0"
E_STORAGE_RATE = "E_STORAGE_RATE"
E_STORAGE_CAPACITY = "E_STORAGE_CAPACITY"

E_WEATHER_IRRADIANCE = "E_WEATHER_IRRADIANCE"
E_WEATHER_WIND = "E_WEATHER_WIND"

E_SCENARIO_PERIODS = "E_SCENARIO_PERIODS"
E_SCENARIO_DT = "E_SCENARIO_DT"
E_SCENARIO_DEMAND_NEG = "E_SCENARIO_DEMAND_NEG"
E_SCENARIO_PENALTY = "E_SCENARIO_PENALTY"
E_SCENARIO_EMISSION_WEIGHT = "E_SCENARIO_EMISSION_WEIGHT"
E_SCENARIO_MAX_EQUIPMENT = "E_SCENARIO_MAX_EQUIPMENT"
E_SERIES_LENGTH = "E_SERIES_LENGTH"
E_WEATHER_MISSING = "E_WEATHER_MISSING"

E_CATALOG_EMPTY = "E_CATALOG_EMPTY"
E_CATALOG_DUPLICATE = "E_CATALOG_DUPLICATE"
E_CATALOG_KIND = "E_CATALOG_KIND"
E_SIZING_RANGE = "E_SIZING_RANGE"

E_SCHEMA_VERSION = "E_SCHEMA_VERSION"
E_SCHEMA_MISSING_FIELD = "E_SCHEMA_MISSING_FIELD"
E_SCHEMA_TYPE = "E_SCHEMA_TYPE"
E_SCHEMA_UNKNOWN_FIELD = "E_SCHEMA_UNKNOWN_FIELD"
E_CSV_MISSING_COLUMN = "E_CSV_MISSING_COLUMN"
E_CSV_BAD_CELL = "E_CSV_BAD_CELL"
E_RESULT_CORRUPT = "E_RESULT_CORRUPT"
