"""Equipment models for microgrid units.

Pure, deterministic evaluation of the per-equipment curves: installation
cost as a function of rated power, hourly fuel cost and CO2 emission of
combined heat-and-power (CHP) and conventional generators, photovoltaic
and wind production curves, and the battery charge/discharge step.  All
functions are side-effect free; unit objects are frozen dataclasses and
safe to share between threads.

Unit conventions (fixed package-wide): power kW, heat kW-thermal, energy
kWh, irradiance W/m2, temperature degC, wind speed m/s, emissions ton/h,
cost currency/h for flows and plain currency for installation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .errors import (
    ModelWarning,
    NonsmoothPointError,
    ValidationError,
    E_CHP_H_RANGE,
    E_CHP_P_RANGE,
    E_CHP_POLYGON,
    E_CHP_RATIO,
    E_CONV_EF_NEG,
    E_CONV_P_RANGE,
    E_COST_CURVE_KIND,
    E_COST_CURVE_NEGATIVE,
    E_PV_RADIATION_KNOTS,
    E_STORAGE_CAPACITY,
    E_STORAGE_ETA,
    E_STORAGE_RATE,
    E_STORAGE_X0,
    E_WEATHER_IRRADIANCE,
    E_WEATHER_WIND,
    E_WIND_CP_BETZ,
    E_WIND_SPEED_ORDER,
)

# Share of total stack gas that is CO2 for a CHP unit; fixed model constant.
CHP_CO2_SHARE = 0.99

# Betz limit: no rotor extracts more than 16/27 of the kinetic energy flux.
BETZ_LIMIT = 16.0 / 27.0


@dataclass(frozen=True)
class InstallCostCurve:
    """Installation cost as a function of rated power.

    ``linear`` kind evaluates ``a + b * p_rated``; ``quadratic`` kind
    evaluates ``d + e * p_rated + f * p_rated**2``.  A negative ``f``
    (cost growing with diminishing slope) is allowed as long as the cost
    stays nonnegative over the rated-power range it is used with, which
    is checked by the owning unit, not here.
    """

    kind: str  # "linear" | "quadratic"
    a: float = 0.0
    b: float = 0.0
    d: float = 0.0
    e: float = 0.0
    f: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "quadratic"):
            raise ValidationError(
                E_COST_CURVE_KIND, "install_cost.kind",
                f"unknown curve kind {self.kind!r}")

    def check_nonnegative(self, p_lo: float, p_hi: float, where: str = "install_cost"):
        """Reject curves that go negative anywhere on [p_lo, p_hi]."""
        candidates = [p_lo, p_hi]
        if self.kind == "quadratic" and self.f != 0.0:
            vertex = -self.e / (2.0 * self.f)
            if p_lo < vertex < p_hi:
                candidates.append(vertex)
        worst = min(install_cost(self, p) for p in candidates)
        if worst < 0.0:
            raise ValidationError(
                E_COST_CURVE_NEGATIVE, where,
                f"cost curve is negative ({worst:g}) on [{p_lo:g}, {p_hi:g}]")


def install_cost(curve: InstallCostCurve, p_rated: float) -> float:
    """Installation cost of one unit at rated power ``p_rated`` (kW)."""
    if p_rated < 0.0:
        raise ValidationError(
            E_COST_CURVE_NEGATIVE, "p_rated",
            f"rated power must be nonnegative, got {p_rated!r}")
    if curve.kind == "linear":
        return curve.a + curve.b * p_rated
    return curve.d + curve.e * p_rated + curve.f * p_rated * p_rated


def install_cost_grad(curve: InstallCostCurve, p_rated: float) -> float:
    """d(install_cost)/d(p_rated); the marginal cost of one more kW."""
    if curve.kind == "linear":
        return curve.b
    return curve.e + 2.0 * curve.f * p_rated


def _polygon_halfspaces(vertices):
    """Convert a convex polygon in (P, H) space to half-spaces.

    Returns a list of (alpha, beta, gamma) with the polygon interior
    satisfying alpha*P + beta*H <= gamma.  Vertices may be given in
    either orientation; collinear or self-intersecting input is rejected.
    """
    n = len(vertices)
    if n < 3:
        raise ValidationError(E_CHP_POLYGON, "for_polygon",
                              f"need at least 3 vertices, got {n}")
    # Signed area decides orientation; zero area means degenerate input.
    area2 = 0.0
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        area2 += x1 * y2 - x2 * y1
    if area2 == 0.0:
        raise ValidationError(E_CHP_POLYGON, "for_polygon",
                              "polygon has zero area")
    pts = list(vertices) if area2 > 0.0 else list(reversed(vertices))
    # Convexity: every cross product of successive edges must be >= 0
    # for a counter-clockwise polygon (this also excludes self-crossing).
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        x2, y2 = pts[(i + 2) % n]
        cross = (x1 - x0) * (y2 - y1) - (y1 - y0) * (x2 - x1)
        if cross < 0.0:
            raise ValidationError(E_CHP_POLYGON, "for_polygon",
                                  "polygon is not convex")
    halfspaces = []
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        # CCW edge (x1,y1)->(x2,y2): interior lies left of the edge.
        alpha = y2 - y1
        beta = -(x2 - x1)
        gamma = alpha * x1 + beta * y1
        halfspaces.append((alpha, beta, gamma))
    return halfspaces


@dataclass(frozen=True)
class ChpUnit:
    """Combined heat-and-power generator.

    Fuel cost is the bivariate quadratic ``a + b*P + c*P^2 + d*H + e*H^2
    + f*H*P`` in currency/h; CO2 emission is linear in electric output.
    The coupling between electric and thermal output is either a fixed
    heat-to-power ratio (back-pressure machine) or a convex polygon of
    admissible (P, H) operating points (extraction-condensing machine).
    """

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float
    phi: float  # emission coefficient, ton/kWh of electric output
    mu: float   # emission coefficient, ton/kWh of electric output
    p_min: float
    p_max: float
    h_min: float = 0.0
    h_max: float = 0.0
    heat_power_ratio: float | None = None   # back-pressure mode when set
    for_polygon: tuple = ()                 # ((P, H), ...) vertices
    ramp_limit: float | None = None         # kW per period
    install_cost: InstallCostCurve = field(
        default_factory=lambda: InstallCostCurve("linear"))

    def __post_init__(self):
        if self.p_min > self.p_max:
            raise ValidationError(E_CHP_P_RANGE, "power",
                                  f"p_min {self.p_min} > p_max {self.p_max}")
        if self.h_min > self.h_max:
            raise ValidationError(E_CHP_H_RANGE, "heat",
                                  f"h_min {self.h_min} > h_max {self.h_max}")
        if self.heat_power_ratio is not None and self.heat_power_ratio <= 0.0:
            raise ValidationError(E_CHP_RATIO, "heat_power_ratio",
                                  f"ratio must be positive, got {self.heat_power_ratio}")
        if self.for_polygon:
            _polygon_halfspaces(self.for_polygon)

    def polygon_halfspaces(self):
        return _polygon_halfspaces(self.for_polygon)


def chp_fuel_cost(u: ChpUnit, p: float, h: float) -> float:
    """Hourly fuel cost of a CHP unit producing ``p`` kW and ``h`` kW-th."""
    return (u.a + u.b * p + u.c * p * p
            + u.d * h + u.e * h * h + u.f * h * p)


def chp_fuel_cost_grad(u: ChpUnit, p: float, h: float) -> tuple[float, float]:
    """(d/dP, d/dH) of :func:`chp_fuel_cost`."""
    return (u.b + 2.0 * u.c * p + u.f * h,
            u.d + 2.0 * u.e * h + u.f * p)


def chp_emission(u: ChpUnit, p: float) -> float:
    """Hourly CO2 emission (ton/h) of a CHP unit at electric output ``p``.

    CO2 is taken as a fixed 99% share of total stack gas.
    """
    return CHP_CO2_SHARE * (u.phi + u.mu) * p


def chp_emission_grad(u: ChpUnit, p: float) -> float:
    return CHP_CO2_SHARE * (u.phi + u.mu)


@dataclass(frozen=True)
class ConventionalGenerator:
    """Fossil-fuel electric generator with optional valve-point ripple.

    Fuel cost is ``c*P^2 + b*P + a + |d * sin(e * (p_min - P))|``; the
    rectified sine models the throttling losses at steam admission valve
    openings and makes the curve nonsmooth and nonconvex whenever
    ``d != 0``.  Emission is ``ef * (h*P^2 + g*P + f)`` in ton/h.
    """

    a: float
    b: float
    c: float
    d: float = 0.0
    e: float = 0.0
    ef: float = 0.0
    h: float = 0.0
    g: float = 0.0
    f: float = 0.0
    p_min: float = 0.0
    p_max: float = 0.0
    ramp_limit: float | None = None
    install_cost: InstallCostCurve = field(
        default_factory=lambda: InstallCostCurve("linear"))

    def __post_init__(self):
        if self.p_min > self.p_max:
            raise ValidationError(E_CONV_P_RANGE, "power",
                                  f"p_min {self.p_min} > p_max {self.p_max}")
        if self.ef < 0.0:
            raise ValidationError(E_CONV_EF_NEG, "ef",
                                  f"emission factor must be >= 0, got {self.ef}")
        if self.c < 0.0:
            warnings.warn(
                "quadratic fuel coefficient c < 0 makes the cost concave; "
                "convex-mode solvers will refuse this unit",
                ModelWarning, stacklevel=3)

    @property
    def has_valve_point(self) -> bool:
        return self.d != 0.0


def _smooth_abs(z: float, eps: float) -> float:
    # sqrt(z^2 + eps^2) - eps: matches |z| at eps=0, C^1 for eps>0,
    # and never exceeds |z| by construction (error is in [-eps, 0]).
    if eps == 0.0:
        return abs(z)
    return math.sqrt(z * z + eps * eps) - eps


def conv_fuel_cost(g: ConventionalGenerator, p: float,
                   smoothing_eps: float = 0.0) -> float:
    """Hourly fuel cost of a conventional generator at output ``p`` kW.

    ``smoothing_eps > 0`` replaces the absolute value of the valve-point
    ripple with the differentiable surrogate ``sqrt(z^2 + eps^2) - eps``
    so gradient-based subsolvers can run; ``smoothing_eps == 0`` gives
    the exact cost and is what reporting uses.
    """
    quad = g.c * p * p + g.b * p + g.a
    if g.d == 0.0:
        return quad
    z = g.d * math.sin(g.e * (g.p_min - p))
    return quad + _smooth_abs(z, smoothing_eps)


def conv_fuel_cost_grad(g: ConventionalGenerator, p: float,
                        smoothing_eps: float = 0.0) -> float:
    """d/dP of :func:`conv_fuel_cost`.

    With ``smoothing_eps == 0`` the exact derivative exists only away
    from the ripple's kinks; asking for it at a kink raises
    :class:`NonsmoothPointError`.
    """
    dquad = 2.0 * g.c * p + g.b
    if g.d == 0.0:
        return dquad
    z = g.d * math.sin(g.e * (g.p_min - p))
    dz = -g.d * g.e * math.cos(g.e * (g.p_min - p))
    if smoothing_eps == 0.0:
        if z == 0.0:
            raise NonsmoothPointError(
                f"valve-point cost is nonsmooth at P={p!r}; "
                "enable smoothing_eps > 0")
        return dquad + math.copysign(1.0, z) * dz
    return dquad + z * dz / math.sqrt(z * z + smoothing_eps * smoothing_eps)


def conv_emission(g: ConventionalGenerator, p: float) -> float:
    """Hourly CO2 emission (ton/h) at output ``p`` kW."""
    return g.ef * (g.h * p * p + g.g * p + g.f)


def conv_emission_grad(g: ConventionalGenerator, p: float) -> float:
    return g.ef * (2.0 * g.h * p + g.g)


@dataclass(frozen=True)
class PvArray:
    """Photovoltaic array with a physical curve and a piecewise curve.

    The physical curve scales a reference output with irradiance and a
    linear cell-temperature correction; the piecewise curve maps plane
    irradiance to output through a quadratic/linear/flat profile and is
    the one used for dispatch availability.
    """

    p_ref: float          # kW at reference conditions
    s_ref: float = 1000.0  # W/m2 reference irradiance
    b_ref: float = 0.005   # 1/degC temperature coefficient
    t_ref: float = 25.0    # degC reference cell temperature
    noct: float = 44.0     # degC nominal operating cell temperature
    p_nominal: float = 0.0  # kW nameplate for the piecewise curve
    r_std: float = 1000.0  # W/m2 full-output irradiance
    r_c: float = 150.0     # W/m2 quadratic/linear knee
    install_cost: InstallCostCurve = field(
        default_factory=lambda: InstallCostCurve("linear"))

    def __post_init__(self):
        if not (0.0 < self.r_c < self.r_std):
            raise ValidationError(
                E_PV_RADIATION_KNOTS, "r_c",
                f"need 0 < r_c < r_std, got r_c={self.r_c}, r_std={self.r_std}")
        if not (0.004 <= abs(self.b_ref) <= 0.006):
            warnings.warn(
                f"|b_ref|={abs(self.b_ref)} outside the usual silicon band "
                "[0.004, 0.006] 1/degC", ModelWarning, stacklevel=3)
        if not (42.0 <= self.noct <= 46.0):
            warnings.warn(f"NOCT={self.noct} outside the usual band [42, 46] degC",
                          ModelWarning, stacklevel=3)


@dataclass(frozen=True)
class WeatherSample:
    """One period of weather: irradiance W/m2, ambient degC, wind m/s."""

    irradiance: float = 0.0
    ambient_temp: float = 20.0
    wind_speed: float = 0.0

    def __post_init__(self):
        if self.irradiance < 0.0:
            raise ValidationError(E_WEATHER_IRRADIANCE, "irradiance",
                                  f"must be >= 0, got {self.irradiance}")
        if self.wind_speed < 0.0:
            raise ValidationError(E_WEATHER_WIND, "wind_speed",
                                  f"must be >= 0, got {self.wind_speed}")


def pv_cell_temp(pv: PvArray, w: WeatherSample) -> float:
    """Cell temperature from ambient temperature and irradiance.

    NOCT is defined at 800 W/m2 above a 20 degC ambient, which is why
    the slope is (NOCT - 20)/800 degC per W/m2.
    """
    return w.ambient_temp + (pv.noct - 20.0) / 800.0 * w.irradiance


def pv_power_physical(pv: PvArray, w: WeatherSample) -> float:
    """Physical PV output (kW); clamped below at zero.

    Note the sign convention: a positive ``b_ref`` makes output grow
    with cell temperature.  Callers wanting the usual silicon derating
    supply a negative coefficient.
    """
    t_c = pv_cell_temp(pv, w)
    raw = pv.p_ref * (w.irradiance / pv.s_ref) * (
        1.0 + pv.b_ref * (t_c - pv.t_ref))
    return max(0.0, raw)


def pv_power_piecewise(pv: PvArray, r: float) -> float:
    """Dispatch-availability PV curve (kW) as a function of irradiance.

    Quadratic up to ``r_c``, linear up to ``r_std``, flat at nameplate
    beyond; continuous at both knots.
    """
    if r < 0.0:
        raise ValidationError(E_WEATHER_IRRADIANCE, "r",
                              f"irradiance must be >= 0, got {r}")
    if r <= pv.r_c:
        return pv.p_nominal * (r * r) / (pv.r_c * pv.r_std)
    if r < pv.r_std:
        return pv.p_nominal * r / pv.r_std
    return pv.p_nominal


@dataclass(frozen=True)
class WindTurbine:
    """Wind turbine with a physical cubic curve and a piecewise curve."""

    rho: float = 1.225     # kg/m3 air density
    area: float = 0.0      # m2 swept area
    c_p: float = 0.4       # power coefficient, < Betz limit
    v_cut_in: float = 3.0
    v_nominal: float = 13.0
    v_cut_out: float = 25.0
    p_nominal: float = 0.0  # kW
    install_cost: InstallCostCurve = field(
        default_factory=lambda: InstallCostCurve("linear"))

    def __post_init__(self):
        if not (0.0 < self.v_cut_in < self.v_nominal < self.v_cut_out):
            raise ValidationError(
                E_WIND_SPEED_ORDER, "speeds",
                "need 0 < v_cut_in < v_nominal < v_cut_out, got "
                f"({self.v_cut_in}, {self.v_nominal}, {self.v_cut_out})")
        if not (0.0 < self.c_p < BETZ_LIMIT):
            raise ValidationError(
                E_WIND_CP_BETZ, "c_p",
                f"power coefficient must be in (0, 16/27), got {self.c_p}")


def wind_power_physical(wt: WindTurbine, v: float) -> float:
    """Aerodynamic power 0.5 * rho * A * C_p * v^3, converted W -> kW."""
    if v < 0.0:
        raise ValidationError(E_WEATHER_WIND, "v",
                              f"wind speed must be >= 0, got {v}")
    return 0.5 * wt.rho * wt.area * wt.c_p * v ** 3 / 1000.0


def wind_power_piecewise(wt: WindTurbine, v: float) -> float:
    """Dispatch-availability wind curve (kW).

    Zero strictly below cut-in and strictly above cut-out, linear ramp
    from cut-in to nominal speed, nameplate from nominal to cut-out.
    The drop to zero at cut-out is a real discontinuity (storm cut-off).
    """
    if v < 0.0:
        raise ValidationError(E_WEATHER_WIND, "v",
                              f"wind speed must be >= 0, got {v}")
    if v < wt.v_cut_in or v > wt.v_cut_out:
        return 0.0
    if v >= wt.v_nominal:
        return wt.p_nominal
    return wt.p_nominal * (v - wt.v_cut_in) / (wt.v_nominal - wt.v_cut_in)


@dataclass(frozen=True)
class StorageUnit:
    """Battery (or other charge/discharge device) with idle losses."""

    capacity: float          # kWh
    eta_idle: float = 1.0    # per-period standing efficiency
    eta_ch: float = 1.0
    eta_dch: float = 1.0
    ch_max: float = 0.0      # kW
    dch_max: float = 0.0     # kW
    x0: float = 0.0          # kWh initial state
    install_cost: InstallCostCurve = field(
        default_factory=lambda: InstallCostCurve("linear"))

    def __post_init__(self):
        if self.capacity <= 0.0:
            raise ValidationError(E_STORAGE_CAPACITY, "capacity",
                                  f"must be > 0, got {self.capacity}")
        for name, eta in (("eta_idle", self.eta_idle),
                          ("eta_ch", self.eta_ch),
                          ("eta_dch", self.eta_dch)):
            if not (0.0 < eta <= 1.0):
                raise ValidationError(E_STORAGE_ETA, name,
                                      f"must be in (0, 1], got {eta}")
        if not (0.0 <= self.x0 <= self.capacity):
            raise ValidationError(E_STORAGE_X0, "x0",
                                  f"must be in [0, capacity], got {self.x0}")
        if self.ch_max <= 0.0 or self.dch_max <= 0.0:
            raise ValidationError(
                E_STORAGE_RATE, "rates",
                f"charge/discharge limits must be > 0, got "
                f"({self.ch_max}, {self.dch_max})")


def storage_step(s: StorageUnit, x_prev: float, ch: float, dch: float,
                 dt: float) -> float:
    """State of charge after one period of charging/discharging.

    ``x_prev * eta_idle + dt * (eta_ch * ch - dch / eta_dch)``.  Whether
    the result stays inside [0, capacity] is a scheduling constraint,
    not an evaluation error.
    """
    return s.eta_idle * x_prev + dt * (s.eta_ch * ch - dch / s.eta_dch)


def storage_step_grad(s: StorageUnit, x_prev: float, ch: float, dch: float,
                      dt: float) -> tuple[float, float, float]:
    """(d/dx_prev, d/dch, d/ddch) of :func:`storage_step`."""
    return (s.eta_idle, dt * s.eta_ch, -dt / s.eta_dch)
