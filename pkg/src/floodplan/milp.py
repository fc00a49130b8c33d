"""Deterministic-equivalent MILP for flood-protection planning.

The model couples three blocks through the protection flags theta_k:

  * protection economics -- beta_k equals the tiger-dam cost when a
    substation is protected and the damage cost otherwise, and enters
    the objective weighted by the probability mass of the scenarios in
    which that substation floods;
  * crew scheduling over the preparation window -- time-indexed binaries
    x[n,k,t] (team n works substation k in hour t) with an exact-hours
    coupling to theta, a one-site-per-team-hour rule, and rising-edge
    binaries y[n,k,t] enforcing a single contiguous installation visit;
  * scenario-indexed DC dispatch over the operating horizon -- nodal
    balance with load shedding, availability-gated generator bounds and
    ramps, and big-M line-flow equations switched by per-line
    availability binaries (the AND of the two terminal substations,
    linearized exactly).

All power quantities are converted to per-unit on the case MVA base, so
the per-line big-M constant B_l * 2 * angle_bound is a valid bound on
the DC flow expression.  Objective units are USD.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (
    CaseModel,
    Line,
    imposed_cost_coefficients,
    protection_time,
    validate_case,
)
from .scenarios import ScenarioSet

LESS = "<="
GREATER = ">="
EQUAL = "=="

# Branching priority: decision binaries drive the availability binaries
# (h_sub is an affine function of theta; h_line is an AND of h_subs).
DECISION_ROLES = ("theta", "x", "y")
AVAILABILITY_ROLES = ("h_sub", "h_line")


@dataclass(frozen=True)
class Variable:
    name: str
    index: int
    lower: float
    upper: float
    is_binary: bool
    role: str


class VarCatalog:
    """Ordered variable registry; creation order defines the column order
    everywhere (solver, MPS export, branching tie-breaks)."""

    def __init__(self) -> None:
        self._vars: list[Variable] = []
        self._by_name: dict[str, int] = {}

    def add(self, name: str, lower: float, upper: float, *, binary: bool, role: str) -> int:
        if name in self._by_name:
            raise ValueError(f"duplicate variable name {name!r}")
        if lower > upper + 1e-12:
            raise ValueError(f"variable {name!r} has empty bound interval [{lower}, {upper}]")
        idx = len(self._vars)
        self._vars.append(Variable(name, idx, lower, upper, binary, role))
        self._by_name[name] = idx
        return idx

    def __len__(self) -> int:
        return len(self._vars)

    def __iter__(self):
        return iter(self._vars)

    def __getitem__(self, idx: int) -> Variable:
        return self._vars[idx]

    def index(self, name: str) -> int:
        return self._by_name[name]

    def names(self) -> list[str]:
        return [v.name for v in self._vars]

    def binary_indices(self) -> list[int]:
        return [v.index for v in self._vars if v.is_binary]

    def by_role(self, role: str) -> list[Variable]:
        return [v for v in self._vars if v.role == role]

    def audit(self) -> dict[str, int]:
        """Per-role and binary/continuous counts (used by size tests)."""
        out: dict[str, int] = {"binary": 0, "continuous": 0}
        for v in self._vars:
            out[v.role] = out.get(v.role, 0) + 1
            out["binary" if v.is_binary else "continuous"] += 1
        return out


@dataclass(frozen=True)
class LinearConstraint:
    """sum_j coeffs[j] * x_j  (sense)  rhs"""

    name: str
    family: str
    coeffs: tuple[tuple[int, float], ...]
    sense: str
    rhs: float


@dataclass
class MilpInstance:
    catalog: VarCatalog
    constraints: list[LinearConstraint]
    objective: np.ndarray
    big_m: float
    warnings: list[str] = field(default_factory=list)
    start_hint: dict[int, float] | None = None

    @property
    def num_vars(self) -> int:
        return len(self.catalog)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def to_debug_dict(self) -> dict:
        """JSON-serialisable dump of the catalog and row families."""
        return {
            "variables": [
                {
                    "name": v.name,
                    "role": v.role,
                    "binary": v.is_binary,
                    "lower": v.lower,
                    "upper": v.upper,
                }
                for v in self.catalog
            ],
            "constraints": [
                {
                    "name": c.name,
                    "family": c.family,
                    "sense": c.sense,
                    "rhs": c.rhs,
                    "terms": {str(j): v for j, v in c.coeffs},
                }
                for c in self.constraints
            ],
            "big_m": self.big_m,
        }


def big_m_for_line(line: Line, angle_bound: float) -> float:
    """Tight per-line big-M: with both terminal angles boxed at
    +-angle_bound, |B_l*(d_o - d_d)| can never exceed B_l*2*angle_bound."""
    return line.susceptance * 2.0 * angle_bound


def crew_edge_constraints(
    catalog: VarCatalog,
    team: int,
    sub_id: str,
    hour: int,
    epsilon: float,
) -> tuple[LinearConstraint, LinearConstraint]:
    """Rising-edge detection rows for one (team, substation, hour):

        (x_t - x_{t-1})/2 - eps <= y_t <= (1 + x_t - x_{t-1})/2 + eps

    With binary x, y and 0 < eps < 0.5 these admit exactly y = 1 on a
    0 -> 1 step of x and y = 0 otherwise.  At the first hour the
    predecessor x is the constant 0 (no work before the window).
    """
    ix = catalog.index(f"x[{team},{sub_id},{hour}]")
    iy = catalog.index(f"y[{team},{sub_id},{hour}]")
    lo_terms = [(ix, 0.5), (iy, -1.0)]
    up_terms = [(iy, 1.0), (ix, -0.5)]
    if hour > 1:
        iprev = catalog.index(f"x[{team},{sub_id},{hour - 1}]")
        lo_terms.append((iprev, -0.5))
        up_terms.append((iprev, 0.5))
    lo = LinearConstraint(
        name=f"edge_lo[{team},{sub_id},{hour}]",
        family="dispatch_edge_lo",
        coeffs=tuple(lo_terms),
        sense=LESS,
        rhs=epsilon,
    )
    up = LinearConstraint(
        name=f"edge_up[{team},{sub_id},{hour}]",
        family="dispatch_edge_up",
        coeffs=tuple(up_terms),
        sense=LESS,
        rhs=0.5 + epsilon,
    )
    return lo, up


# ----------------------------------------------------------------------
# build
# ----------------------------------------------------------------------
def _add_crew_variables(cat: VarCatalog, case: CaseModel) -> None:
    teams = range(1, case.crew.num_teams + 1)
    hours = range(1, case.crew.prep_hours + 1)
    for n in teams:
        for s in case.substations:
            for t in hours:
                cat.add(f"x[{n},{s.id},{t}]", 0.0, 1.0, binary=True, role="x")
    for n in teams:
        for s in case.substations:
            for t in hours:
                cat.add(f"y[{n},{s.id},{t}]", 0.0, 1.0, binary=True, role="y")


def _crew_rows(cat: VarCatalog, case: CaseModel, tau: dict[str, int], row) -> None:
    """Crew budget, exact-hours coupling, one-site-per-team-hour,
    rising-edge detection and single-visit rows."""
    teams = case.crew.num_teams
    prep = case.crew.prep_hours
    budget_terms = [
        (cat.index(f"x[{n},{s.id},{t}]"), 1.0)
        for n in range(1, teams + 1)
        for s in case.substations
        for t in range(1, prep + 1)
    ]
    row("crew_budget", "crew_budget", budget_terms, LESS, float(teams * prep))
    for s in case.substations:
        terms = [
            (cat.index(f"x[{n},{s.id},{t}]"), 1.0)
            for n in range(1, teams + 1)
            for t in range(1, prep + 1)
        ]
        terms.append((cat.index(f"theta[{s.id}]"), -float(tau[s.id])))
        row(f"crew_hours[{s.id}]", "crew_hours", terms, EQUAL, 0.0)
    for n in range(1, teams + 1):
        for t in range(1, prep + 1):
            terms = [(cat.index(f"x[{n},{s.id},{t}]"), 1.0) for s in case.substations]
            row(f"one_site[{n},{t}]", "crew_one_site", terms, LESS, 1.0)
    for n in range(1, teams + 1):
        for s in case.substations:
            for t in range(1, prep + 1):
                lo, up = crew_edge_constraints(cat, n, s.id, t, case.crew.edge_epsilon)
                row(lo.name, lo.family, list(lo.coeffs), lo.sense, lo.rhs)
                row(up.name, up.family, list(up.coeffs), up.sense, up.rhs)
    for s in case.substations:
        terms = [
            (cat.index(f"y[{n},{s.id},{t}]"), 1.0)
            for n in range(1, teams + 1)
            for t in range(1, prep + 1)
        ]
        if terms:
            row(f"single_visit[{s.id}]", "crew_single_visit", terms, LESS, 1.0)


def build(
    case: CaseModel,
    sset: ScenarioSet,
    *,
    initial_output: dict[str, float] | None = None,
) -> MilpInstance:
    """Assemble the deterministic equivalent for ``case`` under the
    retained scenarios.

    ``initial_output`` optionally pins each generator's MW output in the
    hour before the horizon, which activates ramp rows at t=1.  By
    default the initial state is free and ramps constrain hour-to-hour
    moves from t=2 on: a hard-wired zero initial output would contradict
    the must-run lower bound of any available generator whose minimum
    exceeds its hourly ramp, making every scenario infeasible.
    """
    problems = validate_case(case)
    if problems:
        raise ValueError("invalid case: " + "; ".join(problems))
    if abs(sset.total_probability() - 1.0) > 1e-6:
        raise ValueError(
            f"scenario probabilities sum to {sset.total_probability():.8f}, not 1; "
            "normalize the scenario set first"
        )

    base = case.costs.power_base_mva
    voll = case.costs.voll
    bound = case.costs.big_m_angle_bound
    T = case.operating_horizon
    prep = case.crew.prep_hours
    slack = case.slack_bus()
    warnings_list: list[str] = []

    tau = {
        s.id: protection_time(s.mean_flood_depth, case.crew.members_per_team)
        for s in case.substations
    }
    for s in case.substations:
        if tau[s.id] > prep:
            warnings_list.append(
                f"substation {s.id} needs {tau[s.id]} h of dam work but the "
                f"preparation window is {prep} h; it can only remain unprotected"
            )

    cat = VarCatalog()
    # -- decision block -------------------------------------------------
    for s in case.substations:
        cat.add(f"theta[{s.id}]", 0.0, 1.0, binary=True, role="theta")
    _add_crew_variables(cat, case)
    for s in case.substations:
        for sc in sset:
            cat.add(f"h_sub[{s.id},{sc.id}]", 0.0, 1.0, binary=True, role="h_sub")
    for ln in case.lines:
        for sc in sset:
            cat.add(f"h_line[{ln.id},{sc.id}]", 0.0, 1.0, binary=True, role="h_line")
    for s in case.substations:
        lo = min(s.tiger_dam_cost, s.damage_cost)
        hi = max(s.tiger_dam_cost, s.damage_cost)
        cat.add(f"beta[{s.id}]", lo, hi, binary=False, role="beta")
    # -- dispatch block -------------------------------------------------
    for g in case.generators:
        for sc in sset:
            for t in range(1, T + 1):
                cat.add(
                    f"p[{g.id},{sc.id},{t}]", 0.0, g.p_max / base,
                    binary=False, role="p",
                )
    for b in case.buses:
        for sc in sset:
            for t in range(1, T + 1):
                cat.add(
                    f"ls[{b.id},{sc.id},{t}]", 0.0, b.demand_profile[t - 1] / base,
                    binary=False, role="ls",
                )
    for ln in case.lines:
        cap = ln.capacity / base
        for sc in sset:
            for t in range(1, T + 1):
                cat.add(
                    f"flow[{ln.id},{sc.id},{t}]", -cap, cap,
                    binary=False, role="flow",
                )
    for b in case.buses:
        alo, ahi = (0.0, 0.0) if b.id == slack else (-bound, bound)
        for sc in sset:
            for t in range(1, T + 1):
                cat.add(
                    f"angle[{b.id},{sc.id},{t}]", alo, ahi,
                    binary=False, role="angle",
                )

    # -- objective ------------------------------------------------------
    obj = np.zeros(len(cat))
    fail_weight = {
        s.id: sum(sc.probability for sc in sset if sc.fails(s.id))
        for s in case.substations
    }
    for s in case.substations:
        obj[cat.index(f"beta[{s.id}]")] = fail_weight[s.id]
    for b in case.buses:
        for sc in sset:
            for t in range(1, T + 1):
                obj[cat.index(f"ls[{b.id},{sc.id},{t}]")] = sc.probability * voll * base

    rows: list[LinearConstraint] = []

    def row(name, family, terms, sense, rhs):
        rows.append(LinearConstraint(name, family, tuple(terms), sense, rhs))

    # -- protection economics -------------------------------------------
    for s in case.substations:
        dam, damage = imposed_cost_coefficients(s)
        row(
            f"beta_def[{s.id}]", "beta_def",
            [(cat.index(f"beta[{s.id}]"), 1.0), (cat.index(f"theta[{s.id}]"), damage - dam)],
            EQUAL, damage,
        )
    for s in case.substations:
        for sc in sset:
            F = 1.0 if sc.fails(s.id) else 0.0
            row(
                f"sub_avail[{s.id},{sc.id}]", "sub_avail",
                [
                    (cat.index(f"h_sub[{s.id},{sc.id}]"), 1.0),
                    (cat.index(f"theta[{s.id}]"), -F),
                ],
                EQUAL, 1.0 - F,
            )
    # -- line availability = AND of terminal substations ----------------
    for ln in case.lines:
        ko = case.substation_at_bus(ln.from_bus).id
        kd = case.substation_at_bus(ln.to_bus).id
        for sc in sset:
            hl = cat.index(f"h_line[{ln.id},{sc.id}]")
            ho = cat.index(f"h_sub[{ko},{sc.id}]")
            hd = cat.index(f"h_sub[{kd},{sc.id}]")
            row(f"line_avail_o[{ln.id},{sc.id}]", "line_avail_o",
                [(hl, 1.0), (ho, -1.0)], LESS, 0.0)
            row(f"line_avail_d[{ln.id},{sc.id}]", "line_avail_d",
                [(hl, 1.0), (hd, -1.0)], LESS, 0.0)
            row(f"line_avail_and[{ln.id},{sc.id}]", "line_avail_and",
                [(hl, 1.0), (ho, -1.0), (hd, -1.0)], GREATER, -1.0)

    # -- crew block ------------------------------------------------------
    _crew_rows(cat, case, tau, row)

    # -- nodal balance ----------------------------------------------------
    gens_at = {b.id: [g for g in case.generators if g.bus_id == b.id] for b in case.buses}
    out_lines = {b.id: [l for l in case.lines if l.from_bus == b.id] for b in case.buses}
    in_lines = {b.id: [l for l in case.lines if l.to_bus == b.id] for b in case.buses}
    for sc in sset:
        for t in range(1, T + 1):
            for b in case.buses:
                terms = [(cat.index(f"p[{g.id},{sc.id},{t}]"), 1.0) for g in gens_at[b.id]]
                terms.append((cat.index(f"ls[{b.id},{sc.id},{t}]"), 1.0))
                for ln in out_lines[b.id]:
                    terms.append((cat.index(f"flow[{ln.id},{sc.id},{t}]"), -1.0))
                for ln in in_lines[b.id]:
                    terms.append((cat.index(f"flow[{ln.id},{sc.id},{t}]"), 1.0))
                row(
                    f"balance[{b.id},{sc.id},{t}]", "balance",
                    terms, EQUAL, b.demand_profile[t - 1] / base,
                )

    # -- line flow physics (big-M switched) -------------------------------
    max_m = 0.0
    for sc in sset:
        for t in range(1, T + 1):
            for ln in case.lines:
                cap = ln.capacity / base
                M = big_m_for_line(ln, bound)
                max_m = max(max_m, M)
                fi = cat.index(f"flow[{ln.id},{sc.id},{t}]")
                hl = cat.index(f"h_line[{ln.id},{sc.id}]")
                ao = cat.index(f"angle[{ln.from_bus},{sc.id},{t}]")
                ad = cat.index(f"angle[{ln.to_bus},{sc.id},{t}]")
                B = ln.susceptance
                row(f"cap_lo[{ln.id},{sc.id},{t}]", "flow_cap_lo",
                    [(fi, 1.0), (hl, cap)], GREATER, 0.0)
                row(f"cap_up[{ln.id},{sc.id},{t}]", "flow_cap_up",
                    [(fi, 1.0), (hl, -cap)], LESS, 0.0)
                row(f"def_lo[{ln.id},{sc.id},{t}]", "flow_def_lo",
                    [(fi, 1.0), (ao, -B), (ad, B), (hl, -M)], GREATER, -M)
                row(f"def_up[{ln.id},{sc.id},{t}]", "flow_def_up",
                    [(fi, 1.0), (ao, -B), (ad, B), (hl, M)], LESS, M)

    # -- generators --------------------------------------------------------
    for sc in sset:
        for t in range(1, T + 1):
            for g in case.generators:
                ksub = case.substation_at_bus(g.bus_id).id
                pi_ = cat.index(f"p[{g.id},{sc.id},{t}]")
                hs = cat.index(f"h_sub[{ksub},{sc.id}]")
                row(f"gen_lb[{g.id},{sc.id},{t}]", "gen_lb",
                    [(pi_, 1.0), (hs, -g.p_min / base)], GREATER, 0.0)
                row(f"gen_ub[{g.id},{sc.id},{t}]", "gen_ub",
                    [(pi_, 1.0), (hs, -g.p_max / base)], LESS, 0.0)
    for sc in sset:
        for g in case.generators:
            if initial_output is not None and g.id in initial_output:
                p0 = initial_output[g.id] / base
                p1 = cat.index(f"p[{g.id},{sc.id},1]")
                row(f"ramp_up[{g.id},{sc.id},1]", "ramp_up",
                    [(p1, 1.0)], LESS, g.ramp_up / base + p0)
                row(f"ramp_dn[{g.id},{sc.id},1]", "ramp_dn",
                    [(p1, -1.0)], LESS, g.ramp_down / base - p0)
            for t in range(2, T + 1):
                pt = cat.index(f"p[{g.id},{sc.id},{t}]")
                pp = cat.index(f"p[{g.id},{sc.id},{t - 1}]")
                row(f"ramp_up[{g.id},{sc.id},{t}]", "ramp_up",
                    [(pt, 1.0), (pp, -1.0)], LESS, g.ramp_up / base)
                row(f"ramp_dn[{g.id},{sc.id},{t}]", "ramp_dn",
                    [(pt, -1.0), (pp, 1.0)], LESS, g.ramp_down / base)

    # -- a cheap feasible-leaning start for the root LP --------------------
    hint: dict[int, float] = {}
    for s in case.substations:
        hint[cat.index(f"theta[{s.id}]")] = 0.0
        hint[cat.index(f"beta[{s.id}]")] = s.damage_cost
        for sc in sset:
            hint[cat.index(f"h_sub[{s.id},{sc.id}]")] = 0.0 if sc.fails(s.id) else 1.0
    for ln in case.lines:
        ko = case.substation_at_bus(ln.from_bus).id
        kd = case.substation_at_bus(ln.to_bus).id
        for sc in sset:
            avail = (not sc.fails(ko)) and (not sc.fails(kd))
            hint[cat.index(f"h_line[{ln.id},{sc.id}]")] = 1.0 if avail else 0.0
    for b in case.buses:
        for sc in sset:
            for t in range(1, T + 1):
                hint[cat.index(f"ls[{b.id},{sc.id},{t}]")] = b.demand_profile[t - 1] / base

    return MilpInstance(
        catalog=cat,
        constraints=rows,
        objective=obj,
        big_m=max_m,
        warnings=warnings_list,
        start_hint=hint,
    )


def crew_feasibility_instance(case: CaseModel) -> MilpInstance:
    """Crew block only (budget, exact hours, one-site-per-team-hour, edge
    detection, single visit) over theta/x/y -- for fast schedule checks."""
    problems = validate_case(case)
    if problems:
        raise ValueError("invalid case: " + "; ".join(problems))
    tau = {
        s.id: protection_time(s.mean_flood_depth, case.crew.members_per_team)
        for s in case.substations
    }
    cat = VarCatalog()
    for s in case.substations:
        cat.add(f"theta[{s.id}]", 0.0, 1.0, binary=True, role="theta")
    _add_crew_variables(cat, case)
    rows: list[LinearConstraint] = []

    def row(name, family, terms, sense, rhs):
        rows.append(LinearConstraint(name, family, tuple(terms), sense, rhs))

    _crew_rows(cat, case, tau, row)
    return MilpInstance(
        catalog=cat,
        constraints=rows,
        objective=np.zeros(len(cat)),
        big_m=0.0,
    )


# ----------------------------------------------------------------------
# plans, assignments and solutions
# ----------------------------------------------------------------------
Schedule = dict[int, tuple]  # team number -> per-hour substation id or None


def rising_edges(track: tuple) -> list[int]:
    """Hours (1-based) where a team's per-hour site track switches onto a
    substation it was not on the hour before."""
    edges = []
    prev = None
    for t, site in enumerate(track, start=1):
        if site is not None and site != prev:
            edges.append(t)
        prev = site
    return edges


def plan_assignment(
    case: CaseModel,
    sset: ScenarioSet,
    protected: set[str] | frozenset[str],
    schedule: Schedule,
    *,
    include_availability: bool = True,
) -> dict[str, float]:
    """Binary assignment (names -> 0/1) describing an explicit plan.

    ``schedule`` maps team -> tuple of substation ids (or None) per
    preparation hour, mirroring a printed crew roster.  y values are the
    rising edges of each track; availability binaries follow from theta
    and the scenario failure indicators.
    """
    prep = case.crew.prep_hours
    out: dict[str, float] = {}
    for s in case.substations:
        out[f"theta[{s.id}]"] = 1.0 if s.id in protected else 0.0
    for n in range(1, case.crew.num_teams + 1):
        track = tuple(schedule.get(n, tuple([None] * prep)))
        if len(track) != prep:
            raise ValueError(
                f"team {n} schedule has {len(track)} hours, window is {prep}"
            )
        for s in case.substations:
            for t in range(1, prep + 1):
                out[f"x[{n},{s.id},{t}]"] = 1.0 if track[t - 1] == s.id else 0.0
                out[f"y[{n},{s.id},{t}]"] = 0.0
        prev = None
        for t, site in enumerate(track, start=1):
            if site is not None and site != prev:
                out[f"y[{n},{site},{t}]"] = 1.0
            prev = site
    if include_availability:
        for s in case.substations:
            for sc in sset:
                avail = 1.0 if (s.id in protected or not sc.fails(s.id)) else 0.0
                out[f"h_sub[{s.id},{sc.id}]"] = avail
        for ln in case.lines:
            ko = case.substation_at_bus(ln.from_bus).id
            kd = case.substation_at_bus(ln.to_bus).id
            for sc in sset:
                out[f"h_line[{ln.id},{sc.id}]"] = (
                    out[f"h_sub[{ko},{sc.id}]"] * out[f"h_sub[{kd},{sc.id}]"]
                )
    return out


@dataclass
class Solution:
    """Rounded, reporting-ready optimum of a built instance."""

    objective: float
    protected: tuple[str, ...]
    theta: dict[str, int]
    beta: dict[str, float]
    schedule: Schedule
    crew_x: dict[tuple[int, str, int], int]
    crew_y: dict[tuple[int, str, int], int]
    sub_available: dict[tuple[str, str], int]
    line_available: dict[tuple[str, str], int]
    power_mw: dict[tuple[str, str, int], float]
    shed_mw: dict[tuple[int, str, int], float]
    flow_mw: dict[tuple[str, str, int], float]
    angle_rad: dict[tuple[int, str, int], float]
    expected_damage_cost: float
    expected_shed_cost: float


def extract_solution(
    case: CaseModel,
    sset: ScenarioSet,
    instance: MilpInstance,
    values: np.ndarray,
) -> Solution:
    """Turn a raw solver point into a Solution.

    Binaries are rounded to exact integers; the edge binaries y are
    re-derived from the rounded x.  y is objective-neutral, so this only
    scrubs solver tolerance fuzz and keeps reports deterministic.
    """
    cat = instance.catalog
    base = case.costs.power_base_mva
    prep = case.crew.prep_hours
    T = case.operating_horizon

    def val(name: str) -> float:
        return float(values[cat.index(name)])

    def ival(name: str) -> int:
        v = val(name)
        r = int(round(v))
        if abs(v - r) > 1e-4:
            raise ValueError(f"variable {name} = {v} is not integral")
        return r

    theta = {s.id: ival(f"theta[{s.id}]") for s in case.substations}
    protected = tuple(sorted(k for k, v in theta.items() if v == 1))
    beta = {s.id: val(f"beta[{s.id}]") for s in case.substations}

    crew_x: dict[tuple[int, str, int], int] = {}
    schedule: Schedule = {}
    for n in range(1, case.crew.num_teams + 1):
        track: list = [None] * prep
        for s in case.substations:
            for t in range(1, prep + 1):
                v = ival(f"x[{n},{s.id},{t}]")
                crew_x[(n, s.id, t)] = v
                if v == 1:
                    track[t - 1] = s.id
        schedule[n] = tuple(track)
    crew_y: dict[tuple[int, str, int], int] = {
        (n, s.id, t): 0
        for n in range(1, case.crew.num_teams + 1)
        for s in case.substations
        for t in range(1, prep + 1)
    }
    for n, track in schedule.items():
        prev = None
        for t, site in enumerate(track, start=1):
            if site is not None and site != prev:
                crew_y[(n, site, t)] = 1
            prev = site

    sub_av = {
        (s.id, sc.id): ival(f"h_sub[{s.id},{sc.id}]")
        for s in case.substations
        for sc in sset
    }
    line_av = {
        (ln.id, sc.id): ival(f"h_line[{ln.id},{sc.id}]")
        for ln in case.lines
        for sc in sset
    }
    power = {
        (g.id, sc.id, t): val(f"p[{g.id},{sc.id},{t}]") * base
        for g in case.generators
        for sc in sset
        for t in range(1, T + 1)
    }
    shed = {
        (b.id, sc.id, t): val(f"ls[{b.id},{sc.id},{t}]") * base
        for b in case.buses
        for sc in sset
        for t in range(1, T + 1)
    }
    flow = {
        (ln.id, sc.id, t): val(f"flow[{ln.id},{sc.id},{t}]") * base
        for ln in case.lines
        for sc in sset
        for t in range(1, T + 1)
    }
    angle = {
        (b.id, sc.id, t): val(f"angle[{b.id},{sc.id},{t}]")
        for b in case.buses
        for sc in sset
        for t in range(1, T + 1)
    }

    damage = 0.0
    for s in case.substations:
        w = sum(sc.probability for sc in sset if sc.fails(s.id))
        damage += w * (s.tiger_dam_cost if theta[s.id] == 1 else s.damage_cost)
    shed_cost = 0.0
    for sc in sset:
        for b in case.buses:
            for t in range(1, T + 1):
                shed_cost += sc.probability * case.costs.voll * shed[(b.id, sc.id, t)]
    objective = float(instance.objective @ values)

    return Solution(
        objective=objective,
        protected=protected,
        theta=theta,
        beta=beta,
        schedule=schedule,
        crew_x=crew_x,
        crew_y=crew_y,
        sub_available=sub_av,
        line_available=line_av,
        power_mw=power,
        shed_mw=shed,
        flow_mw=flow,
        angle_rad=angle,
        expected_damage_cost=damage,
        expected_shed_cost=shed_cost,
    )


def objective_from_solution(case: CaseModel, sset: ScenarioSet, sol: Solution) -> float:
    """Expected cost recomputed from first principles: probability-weighted
    protection/damage cost over failing scenarios plus the value of lost
    load.  Used to cross-check the assembled objective vector."""
    total = 0.0
    for s in case.substations:
        cost = s.tiger_dam_cost if sol.theta[s.id] == 1 else s.damage_cost
        for sc in sset:
            if sc.fails(s.id):
                total += sc.probability * cost
    for (b, scid, t), mw in sol.shed_mw.items():
        p = next(sc.probability for sc in sset if sc.id == scid)
        total += p * case.costs.voll * mw
    return total
