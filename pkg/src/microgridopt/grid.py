"""Assemble equipment catalogs and scenarios into concrete MINLPs.

Decision variables per candidate unit: an install binary ``y``, an
optional rated-power sizing variable, per-period commitment binaries and
dispatch levels for fuel-burning units, per-period output for renewables
(bounded by weather-driven availability), and charge/discharge/state
variables for storage.  Per period the model carries grid import/export
(when a tariff is present), an excess-generation slack with a penalty
price, and a heat-dump slack when a heat demand is given.

Constraints: per-period electric energy balance (equality), the storage
recursion and its cyclic end condition, optional heat balance, the
equipment-count cap, rated-power bounds, commitment coupling and
operating windows, ramp limits, the CO2 cap, storage capacity coupling,
and CHP feasible-operation-region rows (fixed heat/power ratio or convex
polygon half-spaces, both scaled by the commitment variable so an
offline unit is pinned to zero).

Objective: installation cost plus time-weighted fuel, grid, and
excess-penalty cost plus an emission price.  Fixed fuel/emission
coefficients are gated by the commitment variable so idle units are
free; the valve-point ripple enters smoothed (configurable epsilon) for
the solvers while reporting re-evaluates it exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import components as cm
from .errors import (InfeasibleModelError, ModelWarning, ValidationError,
                     DimensionMismatchError,
                     E_CATALOG_DUPLICATE, E_CATALOG_EMPTY, E_CATALOG_KIND,
                     E_SCENARIO_DEMAND_NEG, E_SCENARIO_DT,
                     E_SCENARIO_EMISSION_WEIGHT, E_SCENARIO_MAX_EQUIPMENT,
                     E_SCENARIO_PENALTY, E_SCENARIO_PERIODS, E_SERIES_LENGTH,
                     E_SIZING_RANGE, E_WEATHER_MISSING)
from .problem import (MinlpProblem, NonlinearConstraint, NonlinearTerm,
                      ProblemBuilder, evaluate as minlp_evaluate)

KINDS = ("chp", "conventional", "pv", "wind", "storage")
DISPATCHABLE = ("chp", "conventional")
RENEWABLE = ("pv", "wind")


@dataclass(frozen=True)
class CandidateUnit:
    """One catalog entry: a component model plus design metadata."""

    name: str
    kind: str
    unit: object
    installed: bool = False
    sizing: tuple[float, float] | None = None   # rated-power range (kW)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(E_CATALOG_KIND, f"catalog[{self.name}].kind",
                                  f"unknown kind {self.kind!r}")
        if self.sizing is not None:
            lo, hi = self.sizing
            if not (0.0 <= lo <= hi) or hi <= 0.0:
                raise ValidationError(
                    E_SIZING_RANGE, f"catalog[{self.name}].sizing",
                    f"need 0 <= min <= max with max > 0, got {self.sizing}")
            self.unit.install_cost.check_nonnegative(
                lo, hi, f"catalog[{self.name}].install_cost")

    @property
    def nameplate(self) -> float:
        """Fixed rated power (kW) used when sizing is off."""
        u = self.unit
        if self.kind in DISPATCHABLE:
            return u.p_max
        if self.kind in RENEWABLE:
            return u.p_nominal
        return max(u.ch_max, u.dch_max)


@dataclass(frozen=True)
class EquipmentCatalog:
    units: tuple[CandidateUnit, ...]

    def __post_init__(self):
        if not self.units:
            raise ValidationError(E_CATALOG_EMPTY, "catalog",
                                  "catalog must contain at least one unit")
        names = [u.name for u in self.units]
        if len(set(names)) != len(names):
            raise ValidationError(E_CATALOG_DUPLICATE, "catalog",
                                  f"duplicate unit names in {names}")
        for u in self.units:
            if u.kind != "storage" and u.sizing is None:
                u.unit.install_cost.check_nonnegative(
                    0.0, u.nameplate, f"catalog[{u.name}].install_cost")

    def __len__(self):
        return len(self.units)

    @property
    def has_renewables(self) -> bool:
        return any(u.kind in RENEWABLE for u in self.units)


def _series(value, periods: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(periods, float(arr))
    if arr.shape != (periods,):
        raise ValidationError(E_SERIES_LENGTH, name,
                              f"series has length {arr.shape[0]}, "
                              f"expected {periods}")
    return arr.copy()


@dataclass(frozen=True)
class GridScenario:
    """Time horizon, demands, weather, tariffs, caps, and penalties."""

    periods: int
    dt: float
    demand: np.ndarray
    heat_demand: np.ndarray | None = None
    weather: tuple[cm.WeatherSample, ...] | None = None
    grid_buy_price: np.ndarray | None = None
    grid_sell_price: np.ndarray | None = None
    grid_import_limit: float | None = None
    grid_export_limit: float | None = None
    co2_cap: float | None = None
    max_equipment: int | None = None
    excess_penalty: float = 1e-3
    emission_weight: float = 0.0

    def __post_init__(self):
        if self.periods < 1:
            raise ValidationError(E_SCENARIO_PERIODS, "scenario.periods",
                                  f"need at least 1 period, got {self.periods}")
        if self.dt <= 0.0:
            raise ValidationError(E_SCENARIO_DT, "scenario.dt",
                                  f"period length must be > 0, got {self.dt}")
        object.__setattr__(self, "demand",
                           _series(self.demand, self.periods, "scenario.demand"))
        if np.any(self.demand < 0.0):
            raise ValidationError(E_SCENARIO_DEMAND_NEG, "scenario.demand",
                                  "demand must be nonnegative per period")
        if self.heat_demand is not None:
            object.__setattr__(self, "heat_demand",
                               _series(self.heat_demand, self.periods,
                                       "scenario.heat_demand"))
            if np.any(self.heat_demand < 0.0):
                raise ValidationError(E_SCENARIO_DEMAND_NEG,
                                      "scenario.heat_demand",
                                      "heat demand must be nonnegative")
        if self.weather is not None and len(self.weather) != self.periods:
            raise ValidationError(E_SERIES_LENGTH, "scenario.weather",
                                  f"weather has {len(self.weather)} samples, "
                                  f"expected {self.periods}")
        for attr in ("grid_buy_price", "grid_sell_price"):
            v = getattr(self, attr)
            if v is not None:
                object.__setattr__(self, attr,
                                   _series(v, self.periods, f"scenario.{attr}"))
        if (self.grid_buy_price is not None
                and self.grid_sell_price is not None
                and np.any(self.grid_sell_price > self.grid_buy_price)):
            warnings.warn("sell price above buy price invites arbitrage "
                          "against the grid model", ModelWarning, stacklevel=3)
        if self.excess_penalty < 0.0:
            raise ValidationError(E_SCENARIO_PENALTY, "scenario.excess_penalty",
                                  "excess penalty must be >= 0")
        if self.emission_weight < 0.0:
            raise ValidationError(E_SCENARIO_EMISSION_WEIGHT,
                                  "scenario.emission_weight",
                                  "emission weight must be >= 0")
        if self.max_equipment is not None and self.max_equipment < 1:
            raise ValidationError(E_SCENARIO_MAX_EQUIPMENT,
                                  "scenario.max_equipment",
                                  "max equipment count must be >= 1")

    @property
    def has_grid(self) -> bool:
        return self.grid_buy_price is not None or self.grid_sell_price is not None


@dataclass(frozen=True)
class BuildOptions:
    commitment: str = "binary"        # "binary" | "relaxed"
    heat_balance: str = "inequality"  # "inequality" (dump slack) | "equality"
    sizing: bool = False
    cyclic_storage: bool = True
    smoothing_eps: float = 1e-6

    def __post_init__(self):
        if self.commitment not in ("binary", "relaxed"):
            raise ValueError(f"unknown commitment mode {self.commitment!r}")
        if self.heat_balance not in ("inequality", "equality"):
            raise ValueError(f"unknown heat balance mode {self.heat_balance!r}")
        if self.smoothing_eps < 0.0:
            raise ValueError("smoothing_eps must be >= 0")


@dataclass
class VariableLayout:
    """Index maps from model roles into the flat variable vector."""

    y: dict = field(default_factory=dict)        # unit idx -> var idx
    pr: dict = field(default_factory=dict)       # unit idx -> var idx
    commit: dict = field(default_factory=dict)   # unit idx -> array(T)
    power: dict = field(default_factory=dict)    # unit idx -> array(T)
    heat: dict = field(default_factory=dict)     # unit idx -> array(T)
    charge: dict = field(default_factory=dict)
    discharge: dict = field(default_factory=dict)
    soc: dict = field(default_factory=dict)
    grid_buy: np.ndarray | None = None
    grid_sell: np.ndarray | None = None
    excess: np.ndarray | None = None
    heat_dump: np.ndarray | None = None


def renewable_availability(catalog: EquipmentCatalog,
                           scenario: GridScenario) -> dict[str, np.ndarray]:
    """Per-period maximum output (kW) of every PV/wind unit.

    Dispatch of a renewable is bounded above by this curve; anything not
    taken is curtailed through the excess slack.
    """
    if catalog.has_renewables and scenario.weather is None:
        raise ValidationError(E_WEATHER_MISSING, "scenario.weather",
                              "catalog has PV/wind units but the scenario "
                              "carries no weather series")
    out: dict[str, np.ndarray] = {}
    for cand in catalog.units:
        if cand.kind == "pv":
            out[cand.name] = np.array(
                [cm.pv_power_piecewise(cand.unit, w.irradiance)
                 for w in scenario.weather])
        elif cand.kind == "wind":
            out[cand.name] = np.array(
                [cm.wind_power_piecewise(cand.unit, w.wind_speed)
                 for w in scenario.weather])
    return out


class _NlExpr:
    """Linear + quadratic + gated-valve expression over the flat vector."""

    def __init__(self):
        self.lin: dict[int, float] = {}
        self.quad: list[tuple[int, int, float]] = []
        self.valve: list[tuple[int, int, float, object]] = []
        self.const = 0.0

    def add_lin(self, idx: int, coef: float):
        if coef:
            self.lin[idx] = self.lin.get(idx, 0.0) + coef

    def add_quad(self, i: int, j: int, coef: float):
        if coef:
            self.quad.append((i, j, coef))

    def add_valve(self, p_idx: int, u_idx: int, scale: float, gen, eps: float):
        # scale * u * smooth|d sin(e (p_min - P))|
        self.valve.append((p_idx, u_idx, scale, (gen, eps)))

    @property
    def has_nonlinear(self) -> bool:
        return bool(self.quad) or bool(self.valve)

    def freeze(self):
        qi = np.array([t[0] for t in self.quad], dtype=np.int64)
        qj = np.array([t[1] for t in self.quad], dtype=np.int64)
        qc = np.array([t[2] for t in self.quad], dtype=np.float64)
        valve = list(self.valve)
        const = self.const

        def fun(z):
            val = const
            if len(qc):
                val += float(np.sum(qc * z[qi] * z[qj]))
            for p_idx, u_idx, scale, (gen, eps) in valve:
                phi = cm.conv_fuel_cost(gen, float(z[p_idx]), eps) - (
                    gen.c * z[p_idx] ** 2 + gen.b * z[p_idx] + gen.a)
                val += scale * float(z[u_idx]) * phi
            return val

        def grad(z, n=None):
            g = np.zeros(len(z))
            if len(qc):
                np.add.at(g, qi, qc * z[qj])
                np.add.at(g, qj, qc * z[qi])
            for p_idx, u_idx, scale, (gen, eps) in valve:
                p = float(z[p_idx])
                phi = cm.conv_fuel_cost(gen, p, eps) - (
                    gen.c * p * p + gen.b * p + gen.a)
                dphi = cm.conv_fuel_cost_grad(gen, p, eps) - (
                    2.0 * gen.c * p + gen.b)
                g[u_idx] += scale * phi
                g[p_idx] += scale * float(z[u_idx]) * dphi
            return g

        return fun, grad


@dataclass
class GridProblem:
    """A built model: the flat MINLP plus everything needed to read it."""

    problem: MinlpProblem
    layout: VariableLayout
    catalog: EquipmentCatalog
    scenario: GridScenario
    options: BuildOptions
    mode: str
    availability: dict[str, np.ndarray]
    nonconvex_reasons: list[str]

    @property
    def is_convex(self) -> bool:
        return not self.nonconvex_reasons


def _convexity_audit(catalog: EquipmentCatalog, options: BuildOptions,
                     scenario: GridScenario) -> list[str]:
    reasons = []
    for cand in catalog.units:
        u = cand.unit
        if cand.kind == "conventional":
            if u.d != 0.0:
                reasons.append(f"valve-point ripple (d != 0) on {cand.name}")
            if u.c < 0.0:
                reasons.append(f"concave fuel curve (c < 0) on {cand.name}")
            if u.ef * u.h < 0.0 and (scenario.emission_weight > 0.0
                                     or scenario.co2_cap is not None):
                reasons.append(f"concave emission curve on {cand.name}")
        elif cand.kind == "chp":
            if u.c < 0.0 or u.e < 0.0 or 4.0 * u.c * u.e < u.f * u.f:
                reasons.append(
                    f"indefinite CHP cost quadratic on {cand.name} "
                    "(needs c >= 0, e >= 0, 4ce >= f^2)")
        if options.sizing and cand.sizing is not None and \
                cand.kind != "storage":
            curve = u.install_cost
            if curve.kind == "quadratic" and curve.f < 0.0:
                reasons.append(
                    f"concave sizing cost (f < 0) on {cand.name}")
    return reasons


def build_problem(catalog: EquipmentCatalog, scenario: GridScenario,
                  mode: str = "design",
                  options: BuildOptions | None = None) -> GridProblem:
    """Build the design or dispatch MINLP for one catalog and scenario."""
    if mode not in ("design", "dispatch"):
        raise ValueError(f"unknown mode {mode!r}")
    options = options or BuildOptions()
    T = scenario.periods
    dt = scenario.dt
    avail = renewable_availability(catalog, scenario)

    if mode == "dispatch" and not any(c.installed for c in catalog.units):
        raise InfeasibleModelError(
            "dispatch mode needs at least one installed unit")

    b = ProblemBuilder(f"microgrid-{mode}")
    lay = VariableLayout()
    nl = _NlExpr()          # nonlinear objective pieces
    emis = _NlExpr()        # total CO2 (tons over horizon)
    lam = scenario.emission_weight
    commit_int = options.commitment == "binary"
    sizing_on = options.sizing and mode == "design"

    # ---- per-unit variables and couplings -------------------------------
    for j, cand in enumerate(catalog.units):
        u = cand.unit
        if mode == "design":
            yj = b.add_var(f"y[{cand.name}]", 0.0, 1.0, integer=True)
        else:
            val = 1.0 if cand.installed else 0.0
            yj = b.add_var(f"y[{cand.name}]", val, val, integer=True)
        lay.y[j] = yj

        sized = sizing_on and cand.sizing is not None and cand.kind != "storage"
        if sized:
            pr_lo, pr_hi = cand.sizing
            prj = b.add_var(f"pr[{cand.name}]", 0.0, pr_hi)
            lay.pr[j] = prj
            # rated power within the vendor range, zero when not installed
            b.add_row([(prj, 1.0), (yj, -pr_hi)], "le", 0.0,
                      f"prmax[{cand.name}]")
            b.add_row([(prj, -1.0), (yj, pr_lo)], "le", 0.0,
                      f"prmin[{cand.name}]")
            curve = u.install_cost
            if curve.kind == "linear":
                b.add_obj(yj, curve.a)
                b.add_obj(prj, curve.b)
            else:
                b.add_obj(yj, curve.d)
                b.add_obj(prj, curve.e)
                nl.add_quad(prj, prj, curve.f)
        else:
            b.add_obj(yj, cm.install_cost(u.install_cost, cand.nameplate))

        if cand.kind in DISPATCHABLE:
            p_cap = cand.sizing[1] if sized else u.p_max
            p_idx = np.empty(T, dtype=np.int64)
            u_idx = np.empty(T, dtype=np.int64)
            for t in range(T):
                p_idx[t] = b.add_var(f"P[{cand.name}][{t}]", 0.0, p_cap)
                u_idx[t] = b.add_var(f"u[{cand.name}][{t}]", 0.0, 1.0,
                                     integer=commit_int)
            lay.power[j] = p_idx
            lay.commit[j] = u_idx
            for t in range(T):
                b.add_row([(u_idx[t], 1.0), (yj, -1.0)], "le", 0.0,
                          f"commit[{cand.name}][{t}]")
                b.add_row([(p_idx[t], 1.0), (u_idx[t], -u.p_max)], "le", 0.0,
                          f"pmax[{cand.name}][{t}]")
                b.add_row([(p_idx[t], -1.0), (u_idx[t], u.p_min)], "le", 0.0,
                          f"pmin[{cand.name}][{t}]")
                if sized:
                    b.add_row([(p_idx[t], 1.0), (lay.pr[j], -1.0)], "le", 0.0,
                              f"prate[{cand.name}][{t}]")
            if u.ramp_limit is not None:
                for t in range(1, T):
                    b.add_row([(p_idx[t], 1.0), (p_idx[t - 1], -1.0)], "le",
                              u.ramp_limit, f"ramp+[{cand.name}][{t}]")
                    b.add_row([(p_idx[t], -1.0), (p_idx[t - 1], 1.0)], "le",
                              u.ramp_limit, f"ramp-[{cand.name}][{t}]")

        if cand.kind == "chp":
            ratio = u.heat_power_ratio
            h_ub = u.h_max
            if ratio is not None:
                h_ub = max(h_ub, ratio * u.p_max)
            if u.for_polygon:
                h_ub = max(h_ub, max(v[1] for v in u.for_polygon))
            h_idx = np.empty(T, dtype=np.int64)
            for t in range(T):
                h_idx[t] = b.add_var(f"H[{cand.name}][{t}]", 0.0, h_ub)
            lay.heat[j] = h_idx
            p_idx = lay.power[j]
            u_idx = lay.commit[j]
            for t in range(T):
                b.add_row([(h_idx[t], 1.0), (u_idx[t], -h_ub)], "le", 0.0,
                          f"hmax[{cand.name}][{t}]")
                if ratio is not None:
                    b.add_row([(h_idx[t], 1.0), (p_idx[t], -ratio)], "eq",
                              0.0, f"hp-ratio[{cand.name}][{t}]")
                elif u.for_polygon:
                    for k, (al, be, ga) in enumerate(u.polygon_halfspaces()):
                        b.add_row([(p_idx[t], al), (h_idx[t], be),
                                   (u_idx[t], -ga)], "le", 0.0,
                                  f"for[{cand.name}][{t}][{k}]")
            # fuel cost: dt*(a u + b P + c P^2 + d H + e H^2 + f H P)
            for t in range(T):
                b.add_obj(u_idx[t], dt * u.a)
                b.add_obj(p_idx[t], dt * u.b)
                b.add_obj(h_idx[t], dt * u.d)
                nl.add_quad(p_idx[t], p_idx[t], dt * u.c)
                nl.add_quad(h_idx[t], h_idx[t], dt * u.e)
                nl.add_quad(h_idx[t], p_idx[t], dt * u.f)
                emis.add_lin(p_idx[t],
                             dt * cm.CHP_CO2_SHARE * (u.phi + u.mu))

        elif cand.kind == "conventional":
            p_idx = lay.power[j]
            u_idx = lay.commit[j]
            for t in range(T):
                b.add_obj(u_idx[t], dt * u.a)
                b.add_obj(p_idx[t], dt * u.b)
                nl.add_quad(p_idx[t], p_idx[t], dt * u.c)
                if u.d != 0.0:
                    nl.add_valve(p_idx[t], u_idx[t], dt, u,
                                 options.smoothing_eps)
                emis.add_lin(p_idx[t], dt * u.ef * u.g)
                emis.add_lin(u_idx[t], dt * u.ef * u.f)
                emis.add_quad(p_idx[t], p_idx[t], dt * u.ef * u.h)

        elif cand.kind in RENEWABLE:
            curve = avail[cand.name]
            p_idx = np.empty(T, dtype=np.int64)
            if cand.sizing is not None and sizing_on:
                frac = curve / cand.nameplate
                pr_hi = cand.sizing[1]
                for t in range(T):
                    p_idx[t] = b.add_var(f"P[{cand.name}][{t}]", 0.0,
                                         frac[t] * pr_hi)
                    if frac[t] > 0.0:
                        b.add_row([(p_idx[t], 1.0), (lay.pr[j], -frac[t])],
                                  "le", 0.0, f"avail[{cand.name}][{t}]")
            else:
                for t in range(T):
                    p_idx[t] = b.add_var(f"P[{cand.name}][{t}]", 0.0,
                                         curve[t])
                    if curve[t] > 0.0:
                        b.add_row([(p_idx[t], 1.0), (lay.y[j], -curve[t])],
                                  "le", 0.0, f"avail[{cand.name}][{t}]")
            lay.power[j] = p_idx

        elif cand.kind == "storage":
            ch_idx = np.empty(T, dtype=np.int64)
            dch_idx = np.empty(T, dtype=np.int64)
            x_idx = np.empty(T, dtype=np.int64)
            for t in range(T):
                ch_idx[t] = b.add_var(f"ch[{cand.name}][{t}]", 0.0, u.ch_max)
                dch_idx[t] = b.add_var(f"dch[{cand.name}][{t}]", 0.0,
                                       u.dch_max)
                x_idx[t] = b.add_var(f"soc[{cand.name}][{t}]", 0.0,
                                     u.capacity)
            lay.charge[j] = ch_idx
            lay.discharge[j] = dch_idx
            lay.soc[j] = x_idx
            for t in range(T):
                b.add_row([(ch_idx[t], 1.0), (yj, -u.ch_max)], "le", 0.0,
                          f"chcap[{cand.name}][{t}]")
                b.add_row([(dch_idx[t], 1.0), (yj, -u.dch_max)], "le", 0.0,
                          f"dchcap[{cand.name}][{t}]")
                b.add_row([(x_idx[t], 1.0), (yj, -u.capacity)], "le", 0.0,
                          f"soccap[{cand.name}][{t}]")
                # state recursion x_t = eta*x_{t-1} + dt*(eta_ch*ch - dch/eta_dch)
                terms = [(x_idx[t], 1.0), (ch_idx[t], -dt * u.eta_ch),
                         (dch_idx[t], dt / u.eta_dch)]
                if t == 0:
                    terms.append((yj, -u.eta_idle * u.x0))
                else:
                    terms.append((x_idx[t - 1], -u.eta_idle))
                b.add_row(terms, "eq", 0.0, f"socstep[{cand.name}][{t}]")
            if options.cyclic_storage:
                b.add_row([(x_idx[T - 1], 1.0), (yj, -u.x0)], "eq", 0.0,
                          f"cyclic[{cand.name}]")

    # ---- per-period shared variables ------------------------------------
    total_gen_cap = sum(c.nameplate for c in catalog.units
                        if c.kind != "storage")
    total_dch = sum(c.unit.dch_max for c in catalog.units
                    if c.kind == "storage")
    total_ch = sum(c.unit.ch_max for c in catalog.units
                   if c.kind == "storage")
    if scenario.has_grid:
        import_cap = (scenario.grid_import_limit
                      if scenario.grid_import_limit is not None
                      else float(np.max(scenario.demand)) + total_ch)
        export_cap = (scenario.grid_export_limit
                      if scenario.grid_export_limit is not None
                      else total_gen_cap + total_dch)
        buy_idx = np.empty(T, dtype=np.int64)
        sell_idx = np.empty(T, dtype=np.int64)
        buy_price = (scenario.grid_buy_price if scenario.grid_buy_price
                     is not None else np.zeros(T))
        sell_price = (scenario.grid_sell_price if scenario.grid_sell_price
                      is not None else np.zeros(T))
        for t in range(T):
            buy_idx[t] = b.add_var(f"buy[{t}]", 0.0, import_cap,
                                   obj=dt * buy_price[t])
            sell_idx[t] = b.add_var(f"sell[{t}]", 0.0, export_cap,
                                    obj=-dt * sell_price[t])
        lay.grid_buy = buy_idx
        lay.grid_sell = sell_idx

    excess_cap = total_gen_cap + total_dch + (
        import_cap if scenario.has_grid else 0.0)
    excess_idx = np.empty(T, dtype=np.int64)
    for t in range(T):
        excess_idx[t] = b.add_var(f"excess[{t}]", 0.0, max(excess_cap, 1.0),
                                  obj=dt * scenario.excess_penalty)
    lay.excess = excess_idx

    if scenario.heat_demand is not None and options.heat_balance == "inequality":
        dump_cap = sum(max(c.unit.h_max,
                           (c.unit.heat_power_ratio or 0.0) * c.unit.p_max)
                       for c in catalog.units if c.kind == "chp")
        dump_idx = np.empty(T, dtype=np.int64)
        for t in range(T):
            dump_idx[t] = b.add_var(f"hdump[{t}]", 0.0, max(dump_cap, 1.0))
        lay.heat_dump = dump_idx

    # ---- balances --------------------------------------------------------
    for t in range(T):
        terms = []
        for j, cand in enumerate(catalog.units):
            if cand.kind == "storage":
                terms.append((lay.discharge[j][t], 1.0))
                terms.append((lay.charge[j][t], -1.0))
            else:
                terms.append((lay.power[j][t], 1.0))
        if scenario.has_grid:
            terms.append((lay.grid_buy[t], 1.0))
            terms.append((lay.grid_sell[t], -1.0))
        terms.append((lay.excess[t], -1.0))
        b.add_row(terms, "eq", scenario.demand[t], f"balance[{t}]")

    if scenario.heat_demand is not None:
        for t in range(T):
            terms = [(lay.heat[j][t], 1.0)
                     for j, cand in enumerate(catalog.units)
                     if cand.kind == "chp"]
            if lay.heat_dump is not None:
                terms.append((lay.heat_dump[t], -1.0))
            b.add_row(terms, "eq", scenario.heat_demand[t], f"heat[{t}]")

    max_eq = (scenario.max_equipment if scenario.max_equipment is not None
              else len(catalog.units))
    b.add_row([(lay.y[j], 1.0) for j in range(len(catalog.units))],
              "le", float(max_eq), "maxequip")

    # ---- emissions: cap row and priced objective term --------------------
    reasons = _convexity_audit(catalog, options, scenario)
    if lam > 0.0:
        for idx, coef in emis.lin.items():
            b.add_obj(idx, lam * coef)
        for (i, jx, c) in emis.quad:
            nl.add_quad(i, jx, lam * c)
    if scenario.co2_cap is not None:
        if emis.quad:
            fun, grad = emis.freeze()
            cap = scenario.co2_cap

            def cap_fun(z, fun=fun, cap=cap):
                return fun(z) - cap

            def cap_grad(z, grad=grad):
                return grad(z)

            b.add_nonlinear(NonlinearConstraint(
                fun=cap_fun, grad=cap_grad,
                convex=all(c >= 0.0 for _, _, c in emis.quad),
                name="co2cap"))
        else:
            b.add_row([(idx, coef) for idx, coef in emis.lin.items()],
                      "le", scenario.co2_cap, "co2cap")

    if nl.has_nonlinear:
        fun, grad = nl.freeze()
        b.obj_nonlinear = NonlinearTerm(fun=fun, grad=grad,
                                        convex=not reasons, name="flowcost")

    problem = b.build()
    return GridProblem(problem=problem, layout=lay, catalog=catalog,
                       scenario=scenario, options=options, mode=mode,
                       availability=avail, nonconvex_reasons=reasons)


@dataclass
class ObjectiveBreakdown:
    install: float = 0.0
    fuel: float = 0.0
    grid_buy: float = 0.0
    grid_sell: float = 0.0
    excess_penalty: float = 0.0
    emission_tons: float = 0.0
    emission_cost: float = 0.0

    @property
    def total(self) -> float:
        return (self.install + self.fuel + self.grid_buy - self.grid_sell
                + self.excess_penalty + self.emission_cost)

    def as_dict(self) -> dict:
        return {"install": self.install, "fuel": self.fuel,
                "grid_buy": self.grid_buy, "grid_sell": self.grid_sell,
                "excess_penalty": self.excess_penalty,
                "emission_tons": self.emission_tons,
                "emission_cost": self.emission_cost, "total": self.total}


@dataclass
class SolutionEvaluation:
    breakdown: ObjectiveBreakdown
    residuals: np.ndarray          # signed linear residuals
    nonlinear_values: np.ndarray
    max_violation: float           # scaled
    max_violation_raw: float
    balance_residual: float        # inf-norm over electric balance rows


def evaluate_solution(gp: GridProblem, assignment) -> SolutionEvaluation:
    """Deterministic re-evaluation of a point against the grid model.

    The fuel total uses the exact valve-point ripple (no smoothing), so
    it can differ from the solver's internal objective by at most the
    smoothing epsilon per committed generator-hour.
    """
    z = np.asarray(assignment, dtype=np.float64)
    if z.shape != (gp.problem.n,):
        raise DimensionMismatchError(
            f"assignment has shape {z.shape}, problem has {gp.problem.n} "
            "variables")
    ev = minlp_evaluate(gp.problem, z)
    bd = ObjectiveBreakdown()
    sc = gp.scenario
    dt = sc.dt
    T = sc.periods
    for j, cand in enumerate(gp.catalog.units):
        u = cand.unit
        y = z[gp.layout.y[j]]
        if j in gp.layout.pr:
            pr = z[gp.layout.pr[j]]
            curve = u.install_cost
            if curve.kind == "linear":
                bd.install += curve.a * y + curve.b * pr
            else:
                bd.install += curve.d * y + curve.e * pr + curve.f * pr * pr
        else:
            bd.install += cm.install_cost(u.install_cost, cand.nameplate) * y
        if cand.kind == "chp":
            for t in range(T):
                p = z[gp.layout.power[j][t]]
                h = z[gp.layout.heat[j][t]]
                uc = z[gp.layout.commit[j][t]]
                bd.fuel += dt * (u.a * uc + u.b * p + u.c * p * p + u.d * h
                                 + u.e * h * h + u.f * h * p)
                bd.emission_tons += dt * cm.chp_emission(u, p)
        elif cand.kind == "conventional":
            for t in range(T):
                p = z[gp.layout.power[j][t]]
                uc = z[gp.layout.commit[j][t]]
                ripple = 0.0
                if u.d != 0.0:
                    ripple = uc * (cm.conv_fuel_cost(u, p, 0.0)
                                   - (u.c * p * p + u.b * p + u.a))
                bd.fuel += dt * (u.a * uc + u.b * p + u.c * p * p + ripple)
                bd.emission_tons += dt * u.ef * (
                    u.h * p * p + u.g * p + u.f * uc)
    if gp.layout.grid_buy is not None:
        bd.grid_buy = float(np.sum(
            dt * sc.grid_buy_price * z[gp.layout.grid_buy])) \
            if sc.grid_buy_price is not None else 0.0
        bd.grid_sell = float(np.sum(
            dt * sc.grid_sell_price * z[gp.layout.grid_sell])) \
            if sc.grid_sell_price is not None else 0.0
    bd.excess_penalty = float(np.sum(
        dt * sc.excess_penalty * z[gp.layout.excess]))
    bd.emission_cost = sc.emission_weight * bd.emission_tons

    names = gp.problem.linear.names
    bal_rows = [i for i, nm in enumerate(names) if nm.startswith("balance[")]
    bal = float(np.max(np.abs(ev.linear_values[bal_rows]))) if bal_rows else 0.0
    return SolutionEvaluation(
        breakdown=bd, residuals=ev.linear_values,
        nonlinear_values=ev.nonlinear_values,
        max_violation=ev.max_violation,
        max_violation_raw=ev.max_violation_raw,
        balance_residual=bal)


@dataclass
class DispatchSchedule:
    """Per-period, per-unit view of a solution, ready for reporting."""

    unit_names: list[str]
    unit_kinds: list[str]
    install: np.ndarray            # (J,)
    rated_power: np.ndarray        # (J,) nameplate or sized rating
    power: np.ndarray              # (J, T); charge-discharge for storage
    heat: np.ndarray               # (J, T)
    charge: np.ndarray             # (J, T)
    discharge: np.ndarray          # (J, T)
    soc: np.ndarray                # (J, T)
    commit: np.ndarray             # (J, T)
    grid_buy: np.ndarray           # (T,)
    grid_sell: np.ndarray          # (T,)
    excess: np.ndarray             # (T,)
    heat_dump: np.ndarray          # (T,)
    demand: np.ndarray             # (T,)
    emission_per_period: np.ndarray  # (T,) tons
    breakdown: ObjectiveBreakdown
    max_violation: float
    max_violation_raw: float
    balance_residual: float


def extract_schedule(gp: GridProblem, assignment) -> DispatchSchedule:
    """Build a :class:`DispatchSchedule` from a flat solution vector."""
    z = np.asarray(assignment, dtype=np.float64)
    ev = evaluate_solution(gp, z)
    J = len(gp.catalog.units)
    T = gp.scenario.periods
    dt = gp.scenario.dt
    shape = (J, T)
    sched = DispatchSchedule(
        unit_names=[c.name for c in gp.catalog.units],
        unit_kinds=[c.kind for c in gp.catalog.units],
        install=np.zeros(J), rated_power=np.zeros(J),
        power=np.zeros(shape), heat=np.zeros(shape),
        charge=np.zeros(shape), discharge=np.zeros(shape),
        soc=np.zeros(shape), commit=np.zeros(shape),
        grid_buy=np.zeros(T), grid_sell=np.zeros(T),
        excess=np.asarray(z[gp.layout.excess]),
        heat_dump=np.zeros(T), demand=gp.scenario.demand.copy(),
        emission_per_period=np.zeros(T),
        breakdown=ev.breakdown, max_violation=ev.max_violation,
        max_violation_raw=ev.max_violation_raw,
        balance_residual=ev.balance_residual)
    for j, cand in enumerate(gp.catalog.units):
        sched.install[j] = z[gp.layout.y[j]]
        sched.rated_power[j] = (z[gp.layout.pr[j]] if j in gp.layout.pr
                                else cand.nameplate * sched.install[j])
        if j in gp.layout.power:
            sched.power[j] = z[gp.layout.power[j]]
        if j in gp.layout.heat:
            sched.heat[j] = z[gp.layout.heat[j]]
        if j in gp.layout.commit:
            sched.commit[j] = z[gp.layout.commit[j]]
        if j in gp.layout.charge:
            sched.charge[j] = z[gp.layout.charge[j]]
            sched.discharge[j] = z[gp.layout.discharge[j]]
            sched.soc[j] = z[gp.layout.soc[j]]
        u = cand.unit
        for t in range(T):
            if cand.kind == "chp":
                sched.emission_per_period[t] += dt * cm.chp_emission(
                    u, sched.power[j][t])
            elif cand.kind == "conventional":
                sched.emission_per_period[t] += dt * u.ef * (
                    u.h * sched.power[j][t] ** 2 + u.g * sched.power[j][t]
                    + u.f * sched.commit[j][t])
    if gp.layout.grid_buy is not None:
        sched.grid_buy = np.asarray(z[gp.layout.grid_buy])
        sched.grid_sell = np.asarray(z[gp.layout.grid_sell])
    if gp.layout.heat_dump is not None:
        sched.heat_dump = np.asarray(z[gp.layout.heat_dump])
    return sched
