"""Plan evaluation: expected cost, resilience curves, recovery dynamics,
deterministic baseline, plan comparison, and exhaustive plan scans.

A *plan* is a protection set plus a crew schedule.  Evaluation always
re-scores plans on a caller-chosen scenario set via the same objective
the optimizer uses (probability-weighted protection/damage cost plus
value of lost load), so optimizer output and hand-written plans are
directly comparable.

The recovery simulation replays a scenario hour by hour: failed,
unprotected substations return to service once their repair time (ceiled
to the hour grid) elapses, and each hour's served load comes from a
single-hour DC dispatch.  The simulator relaxes generator minimum-output
requirements (a must-run floor can make an islanded hour infeasible;
shedding everything must always be admissible in a what-if replay), so
simulated service can only be optimistic about minima -- this is stated
in the report header.

For flat demand profiles the module can also scan *every* schedulable
protection set exactly, pricing each through cached single-hour
dispatches.  That scan powers the sensitivity note (which input
perturbations flip the chosen protection set) and doubles as an
independent optimum oracle for the MILP in tests.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .milp import (
    MilpInstance,
    Schedule,
    Solution,
    build,
    extract_solution,
    plan_assignment,
)
from .model import CaseModel, protection_time
from .scenarios import FailureScenario, ScenarioSet, nested_severity_reduction
from .solver import (
    EQUAL,
    CheckResult,
    MipResult,
    StandardForm,
    solve_lp,
    solve_mip,
    warm_start_check,
)

METRIC_DEFINITIONS = {
    "outage_magnitude_mw": "largest single-hour unserved demand (MW) over the recovery window",
    "outage_time_h": "number of recovery hours with unserved demand above 1e-6 MW",
    "expected_*": "probability-weighted sum of the per-scenario metric",
    "repair_rounding": "repair times are ceiled to the hour grid (e.g. 23.1 h becomes 24 h)",
    "generator_minima": "the recovery simulation drops generator minimum-output floors so every hour admits a dispatch",
}


@dataclass(frozen=True)
class Plan:
    """A protection set plus the crew schedule that installs it."""

    protected: frozenset[str]
    schedule: tuple[tuple, ...]  # one per-hour site tuple per team
    label: str = "plan"

    def schedule_dict(self) -> Schedule:
        return {n + 1: track for n, track in enumerate(self.schedule)}


def plan_from_solution(sol: Solution, label: str = "plan") -> Plan:
    teams = sorted(sol.schedule)
    return Plan(
        protected=frozenset(sol.protected),
        schedule=tuple(sol.schedule[n] for n in teams),
        label=label,
    )


def empty_plan(case: CaseModel, label: str = "unprotected") -> Plan:
    empty_track = tuple([None] * case.crew.prep_hours)
    return Plan(
        protected=frozenset(),
        schedule=tuple(empty_track for _ in range(case.crew.num_teams)),
        label=label,
    )


def schedule_for(case: CaseModel, protected: frozenset[str] | set[str]) -> Schedule | None:
    """Pack the required dam-installation hours into the team timelines.

    Teams work one substation at a time, each substation gets one
    contiguous visit of exactly its protection time, so a set is
    schedulable iff its protection times bin-pack into num_teams bins of
    prep_hours.  Exact backtracking search (small inputs); returns a
    team -> per-hour-site mapping or None.
    """
    prep = case.crew.prep_hours
    teams = case.crew.num_teams
    tau = {
        s.id: protection_time(s.mean_flood_depth, case.crew.members_per_team)
        for s in case.substations
        if s.id in protected
    }
    if set(protected) - set(tau):
        raise KeyError(f"unknown substations: {sorted(set(protected) - set(tau))}")
    items = sorted(protected, key=lambda k: (-tau[k], k))
    caps = [prep] * teams
    bins: list[list[str]] = [[] for _ in range(teams)]

    def place(i: int) -> bool:
        if i == len(items):
            return True
        k = items[i]
        seen_caps: set[int] = set()
        for n in range(teams):
            if caps[n] >= tau[k] and caps[n] not in seen_caps:
                seen_caps.add(caps[n])
                caps[n] -= tau[k]
                bins[n].append(k)
                if place(i + 1):
                    return True
                caps[n] += tau[k]
                bins[n].pop()
        return False

    if not place(0):
        return None
    schedule: Schedule = {}
    for n in range(teams):
        track: list = []
        for k in bins[n]:
            track.extend([k] * tau[k])
        track.extend([None] * (prep - len(track)))
        schedule[n + 1] = tuple(track)
    return schedule


# ----------------------------------------------------------------------
# single-hour DC dispatch
# ----------------------------------------------------------------------
@dataclass
class HourlyDispatch:
    status: str
    served_mw: float
    shed_mw: float
    shed_by_bus: dict[int, float]
    power_by_gen: dict[str, float]
    flow_by_line: dict[str, float]
    angle_by_bus: dict[int, float]


class OpfCache:
    """Single-hour DC dispatch solved per (availability, demand) key.

    With availability fixed there is no big-M switching: unavailable
    lines are pinned to zero flow, available lines carry the exact
    f = B * (angle_o - angle_d) equality, unavailable generators are
    pinned to zero output.
    """

    def __init__(self, case: CaseModel, *, enforce_p_min: bool = True) -> None:
        self.case = case
        self.enforce_p_min = enforce_p_min
        self._memo: dict[tuple, HourlyDispatch] = {}

    def dispatch(
        self, available: frozenset[str], demand_mw: tuple[float, ...]
    ) -> HourlyDispatch:
        key = (available, demand_mw)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        out = self._solve(available, demand_mw)
        self._memo[key] = out
        return out

    def _solve(self, available: frozenset[str], demand_mw) -> HourlyDispatch:
        case = self.case
        base = case.costs.power_base_mva
        bound = case.costs.big_m_angle_bound
        slack = case.slack_bus()
        buses = case.buses
        demand = dict(zip((b.id for b in buses), demand_mw))

        def sub_ok(bus_id: int) -> bool:
            return case.substation_at_bus(bus_id).id in available

        cols: list[str] = []
        lower: list[float] = []
        upper: list[float] = []
        cost: list[float] = []

        def add(name, lo, up, c=0.0):
            cols.append(name)
            lower.append(lo)
            upper.append(up)
            cost.append(c)
            return len(cols) - 1

        p_idx = {}
        for g in case.generators:
            ok = sub_ok(g.bus_id)
            lo = g.p_min / base if (ok and self.enforce_p_min) else 0.0
            up = g.p_max / base if ok else 0.0
            p_idx[g.id] = add(f"p[{g.id}]", lo, up)
        ls_idx = {}
        for b in buses:
            ls_idx[b.id] = add(f"ls[{b.id}]", 0.0, demand[b.id] / base, 1.0)
        f_idx = {}
        for ln in case.lines:
            ok = sub_ok(ln.from_bus) and sub_ok(ln.to_bus)
            cap = ln.capacity / base if ok else 0.0
            f_idx[ln.id] = add(f"flow[{ln.id}]", -cap, cap)
        a_idx = {}
        for b in buses:
            lo, up = (0.0, 0.0) if b.id == slack else (-bound, bound)
            a_idx[b.id] = add(f"angle[{b.id}]", lo, up)

        rows = []
        senses = []
        rhs = []
        for b in buses:
            terms = [(p_idx[g.id], 1.0) for g in case.generators if g.bus_id == b.id]
            terms.append((ls_idx[b.id], 1.0))
            for ln in case.lines:
                if ln.from_bus == b.id:
                    terms.append((f_idx[ln.id], -1.0))
                elif ln.to_bus == b.id:
                    terms.append((f_idx[ln.id], 1.0))
            rows.append(terms)
            senses.append(EQUAL)
            rhs.append(demand[b.id] / base)
        for ln in case.lines:
            if sub_ok(ln.from_bus) and sub_ok(ln.to_bus):
                rows.append(
                    [
                        (f_idx[ln.id], 1.0),
                        (a_idx[ln.from_bus], -ln.susceptance),
                        (a_idx[ln.to_bus], ln.susceptance),
                    ]
                )
                senses.append(EQUAL)
                rhs.append(0.0)

        data, ri, ci = [], [], []
        for i, terms in enumerate(rows):
            for j, v in terms:
                ri.append(i)
                ci.append(j)
                data.append(v)
        A = sp.coo_matrix((data, (ri, ci)), shape=(len(rows), len(cols)))
        std = StandardForm(
            A,
            senses,
            np.array(rhs),
            np.array(lower),
            np.array(upper),
            np.array(cost),
            np.zeros(len(cols), dtype=bool),
        )
        res = solve_lp(std)
        if res.status != "optimal":
            return HourlyDispatch(res.status, 0.0, sum(demand.values()), {}, {}, {}, {})
        shed_by_bus = {b.id: res.x[ls_idx[b.id]] * base for b in buses}
        total_shed = sum(shed_by_bus.values())
        total_demand = sum(demand.values())
        return HourlyDispatch(
            "optimal",
            total_demand - total_shed,
            total_shed,
            shed_by_bus,
            {g.id: res.x[p_idx[g.id]] * base for g in case.generators},
            {ln.id: res.x[f_idx[ln.id]] * base for ln in case.lines},
            {b.id: res.x[a_idx[b.id]] for b in buses},
        )


def available_set(
    case: CaseModel, scenario: FailureScenario, protected: frozenset[str] | set[str]
) -> frozenset[str]:
    return frozenset(
        s.id
        for s in case.substations
        if (s.id in protected) or (not scenario.fails(s.id))
    )


# ----------------------------------------------------------------------
# recovery simulation and resilience curves
# ----------------------------------------------------------------------
@dataclass
class ResilienceCurve:
    """Hourly (served, demand) samples per scenario plus the expected
    (probability-weighted) curve."""

    samples: dict[str, list[tuple[int, float, float]]]  # id -> (hour, served, demand)
    probabilities: dict[str, float]
    expected: list[tuple[int, float, float]] = field(default_factory=list)

    def finalize(self) -> "ResilienceCurve":
        hours = sorted({h for ss in self.samples.values() for h, _, _ in ss})
        exp = []
        for h in hours:
            served = sum(
                self.probabilities[sid] * dict((a, (b, c)) for a, b, c in ss)[h][0]
                for sid, ss in self.samples.items()
            )
            demand = sum(
                self.probabilities[sid] * dict((a, (b, c)) for a, b, c in ss)[h][1]
                for sid, ss in self.samples.items()
            )
            exp.append((h, served, demand))
        self.expected = exp
        return self


def recovery_horizon(case: CaseModel) -> int:
    """Shared recovery time axis: the largest (hour-ceiled) repair time,
    so curves from different plans and scenarios are comparable."""
    if not case.substations:
        return 0
    return max(int(math.ceil(s.repair_time)) for s in case.substations)


def recovery_simulation(
    case: CaseModel,
    scenario: FailureScenario,
    protected: frozenset[str] | set[str],
    *,
    cache: OpfCache | None = None,
    horizon: int | None = None,
) -> list[tuple[int, float, float]]:
    """(hour, served MW, demand MW) from flood onset (hour 0) until every
    repair has completed.

    Substation k is offline at hour h iff it failed in the scenario, was
    not protected, and h < ceil(repair_time_k); availability therefore
    only grows, and served load is non-decreasing for flat profiles.
    """
    if cache is None:
        cache = OpfCache(case, enforce_p_min=False)
    H = recovery_horizon(case) if horizon is None else horizon
    T = case.operating_horizon
    samples = []
    for h in range(H + 1):
        avail = frozenset(
            s.id
            for s in case.substations
            if (s.id in protected)
            or (not scenario.fails(s.id))
            or h >= int(math.ceil(s.repair_time))
        )
        demand = tuple(b.demand_profile[h % T] for b in case.buses)
        disp = cache.dispatch(avail, demand)
        if disp.status != "optimal":
            raise RuntimeError(
                f"recovery dispatch failed with status {disp.status} at hour {h}"
            )
        samples.append((h, disp.served_mw, float(sum(demand))))
    return samples


def resilience_curves(
    case: CaseModel,
    sset: ScenarioSet,
    protected: frozenset[str] | set[str],
) -> ResilienceCurve:
    cache = OpfCache(case, enforce_p_min=False)
    samples = {
        sc.id: recovery_simulation(case, sc, protected, cache=cache) for sc in sset
    }
    probs = {sc.id: sc.probability for sc in sset}
    return ResilienceCurve(samples, probs).finalize()


@dataclass
class OutageMetrics:
    per_scenario: dict[str, tuple[float, int]]  # id -> (magnitude MW, time h)
    expected_magnitude_mw: float
    expected_time_h: float


def outage_metrics(curve: ResilienceCurve) -> OutageMetrics:
    """Magnitude = worst single-hour unserved MW; time = hours with any
    unserved demand; expectations are probability-weighted."""
    per = {}
    for sid, samples in curve.samples.items():
        gaps = [demand - served for _, served, demand in samples]
        magnitude = max(gaps) if gaps else 0.0
        time = sum(1 for g in gaps if g > 1e-6)
        per[sid] = (magnitude, time)
    exp_mag = sum(curve.probabilities[sid] * per[sid][0] for sid in per)
    exp_time = sum(curve.probabilities[sid] * per[sid][1] for sid in per)
    return OutageMetrics(per, exp_mag, exp_time)


def curve_to_csv(curve: ResilienceCurve) -> str:
    """CSV with columns scenario_id,hour,demand_mw,served_mw; the
    probability-weighted curve appears under scenario_id 'expected'."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["scenario_id", "hour", "demand_mw", "served_mw"])
    for sid in sorted(curve.samples):
        for h, served, demand in curve.samples[sid]:
            w.writerow([sid, h, repr(round(float(demand), 9)), repr(round(float(served), 9))])
    for h, served, demand in curve.expected:
        w.writerow(["expected", h, repr(round(float(demand), 9)), repr(round(float(served), 9))])
    return out.getvalue()


# ----------------------------------------------------------------------
# optimization driver with verified warm starts
# ----------------------------------------------------------------------
def _flat_profiles(case: CaseModel) -> bool:
    return all(len(set(b.demand_profile)) <= 1 for b in case.buses)


def complete_plan_values(
    case: CaseModel,
    sset: ScenarioSet,
    instance: MilpInstance,
    protected: frozenset[str],
    schedule: Schedule,
) -> np.ndarray | None:
    """Full variable vector for an explicit plan: binaries from the plan,
    continuous block filled with an optimal completion.

    Flat demand + free initial ramp state admit a fast path: solve each
    scenario's single hour once and repeat it across the horizon (zero
    ramp moves, hour-separable optimality).  Otherwise fall back to the
    LP completion used by warm_start_check.  Returns None when the plan
    admits no feasible completion.
    """
    assign = plan_assignment(case, sset, protected, schedule)
    cat = instance.catalog
    fast = _hour_replication_values(case, sset, instance, protected, assign)
    if fast is not None:
        return fast
    check = warm_start_check(instance, assign)
    if not check.feasible:
        return None
    return check.values


def _hour_replication_values(
    case: CaseModel,
    sset: ScenarioSet,
    instance: MilpInstance,
    protected: frozenset[str],
    assign: dict[str, float],
) -> np.ndarray | None:
    """Fast completion for flat profiles: each scenario's single-hour
    optimal dispatch repeated across every hour (zero ramp movement, no
    hour coupling).  Returns None when inapplicable; the caller then
    falls back to the generic LP completion."""
    if not _flat_profiles(case):
        return None
    if any(
        c.family in ("ramp_up", "ramp_dn") and c.name.endswith(",1]")
        for c in instance.constraints
    ):
        return None
    cat = instance.catalog
    base = case.costs.power_base_mva
    T = case.operating_horizon
    values = np.zeros(len(cat))
    for name, v in assign.items():
        values[cat.index(name)] = v
    for s in case.substations:
        values[cat.index(f"beta[{s.id}]")] = (
            s.tiger_dam_cost if s.id in protected else s.damage_cost
        )
    cache = OpfCache(case, enforce_p_min=True)
    demand = tuple(b.demand_profile[0] for b in case.buses)
    for sc in sset:
        disp = cache.dispatch(available_set(case, sc, protected), demand)
        if disp.status != "optimal":
            return None
        for t in range(1, T + 1):
            for g in case.generators:
                values[cat.index(f"p[{g.id},{sc.id},{t}]")] = (
                    disp.power_by_gen[g.id] / base
                )
            for b in case.buses:
                values[cat.index(f"ls[{b.id},{sc.id},{t}]")] = (
                    disp.shed_by_bus[b.id] / base
                )
                values[cat.index(f"angle[{b.id},{sc.id},{t}]")] = disp.angle_by_bus[
                    b.id
                ]
            for ln in case.lines:
                values[cat.index(f"flow[{ln.id},{sc.id},{t}]")] = (
                    disp.flow_by_line[ln.id] / base
                )
    return values


def optimize_case(
    case: CaseModel,
    sset: ScenarioSet,
    *,
    gap_tol: float = 1e-6,
    node_limit: int | None = None,
    log=None,
    initial_output: dict[str, float] | None = None,
) -> tuple[Solution | None, MipResult, MilpInstance]:
    """Build and solve the planning MILP.

    Wires two verified accelerators into branch-and-bound: a starting
    incumbent from the best exhaustively-priced plan (small flat cases),
    and a node heuristic that completes any node whose protection flags
    are integral into a full plan.  Both candidates are re-checked
    against the instance before acceptance, so they cannot change the
    optimum -- only the node count.
    """
    instance = build(case, sset, initial_output=initial_output)
    cat = instance.catalog
    theta_cols = {s.id: cat.index(f"theta[{s.id}]") for s in case.substations}

    memo: dict[frozenset, np.ndarray | None] = {}

    def complete(protected: frozenset) -> np.ndarray | None:
        if protected in memo:
            return memo[protected]
        sched = schedule_for(case, protected)
        values = (
            None
            if sched is None
            else complete_plan_values(case, sset, instance, protected, sched)
        )
        memo[protected] = values
        return values

    def heuristic(x: np.ndarray) -> np.ndarray | None:
        chosen = []
        for sid, j in theta_cols.items():
            v = x[j]
            if abs(v - round(v)) > 1e-6:
                return None
            if round(v) == 1:
                chosen.append(sid)
        return complete(frozenset(chosen))

    mip_start = None
    if _flat_profiles(case) and len(case.substations) <= 8 and initial_output is None:
        best = best_plans(case, sset, limit=1)
        if best:
            mip_start = complete(best[0].protected)
    if mip_start is None:
        mip_start = complete(frozenset())

    result = solve_mip(
        instance,
        gap_tol=gap_tol,
        node_limit=node_limit,
        log=log,
        mip_start=mip_start,
        heuristic=heuristic,
    )
    solution = None
    if result.x is not None:
        solution = extract_solution(case, sset, instance, result.x)
    return solution, result, instance


def diagnose_infeasibility(
    case: CaseModel, sset: ScenarioSet, instance: MilpInstance
) -> tuple[str, ...]:
    """Constraint families that reject the do-nothing plan.

    If the model is infeasible then every plan is, including the empty
    one, so checking it always yields a concrete violated family to
    report."""
    assign = plan_assignment(case, sset, frozenset(), {})
    check = warm_start_check(instance, assign)
    if check.feasible:
        return ()
    return check.violated_families


def deterministic_scenario_set(case: CaseModel) -> ScenarioSet:
    """The single certain-failure scenario: every substation fails."""
    return nested_severity_reduction(case.substations, [0.0])


def deterministic_baseline(
    case: CaseModel,
    *,
    gap_tol: float = 1e-6,
    node_limit: int | None = None,
    log=None,
) -> tuple[Plan, Solution, MipResult]:
    """Protection plan chosen as if every substation will certainly fail
    (failure probabilities ignored); crew and cost data unchanged."""
    det = deterministic_scenario_set(case)
    solution, result, _ = optimize_case(
        case, det, gap_tol=gap_tol, node_limit=node_limit, log=log
    )
    if solution is None:
        raise RuntimeError(f"baseline solve ended without a plan: {result.status}")
    return plan_from_solution(solution, label="deterministic"), solution, result


# ----------------------------------------------------------------------
# scoring fixed plans on a scenario set
# ----------------------------------------------------------------------
@dataclass
class PlanScore:
    plan: Plan
    total_cost: float
    damage_cost: float
    shed_cost: float
    check: CheckResult


def score_plan(
    case: CaseModel,
    sset: ScenarioSet,
    plan: Plan,
    *,
    instance: MilpInstance | None = None,
) -> PlanScore:
    """Expected cost of a fixed plan, by fixing its binaries in the MILP
    and letting the LP pick the best dispatch.  Raises on infeasible
    plans, naming the violated constraint families."""
    if instance is None:
        instance = build(case, sset)
    assign = plan_assignment(case, sset, plan.protected, plan.schedule_dict())
    check = warm_start_check(instance, assign)
    if not check.feasible:
        raise ValueError(
            f"plan {plan.label!r} is infeasible; violated constraint families: "
            f"{', '.join(check.violated_families)}"
        )
    damage = 0.0
    for s in case.substations:
        w = sum(sc.probability for sc in sset if sc.fails(s.id))
        damage += w * (
            s.tiger_dam_cost if s.id in plan.protected else s.damage_cost
        )
    return PlanScore(plan, check.objective, damage, check.objective - damage, check)


def compare_plans(
    case: CaseModel,
    sset: ScenarioSet,
    plan_a: Plan,
    plan_b: Plan,
) -> dict:
    """Score two plans on the same scenario set and report absolute and
    percentage deltas (a relative to b) for cost and outage metrics."""
    instance = build(case, sset)
    score_a = score_plan(case, sset, plan_a, instance=instance)
    score_b = score_plan(case, sset, plan_b, instance=instance)
    met_a = outage_metrics(resilience_curves(case, sset, plan_a.protected))
    met_b = outage_metrics(resilience_curves(case, sset, plan_b.protected))

    def block(va: float, vb: float) -> dict:
        delta = va - vb
        pct = (delta / abs(vb) * 100.0) if abs(vb) > 1e-12 else None
        return {"a": va, "b": vb, "delta": delta, "delta_pct": pct}

    return {
        "plan_a": {"label": plan_a.label, "protected": sorted(plan_a.protected)},
        "plan_b": {"label": plan_b.label, "protected": sorted(plan_b.protected)},
        "expected_cost": block(score_a.total_cost, score_b.total_cost),
        "expected_damage_cost": block(score_a.damage_cost, score_b.damage_cost),
        "expected_shed_cost": block(score_a.shed_cost, score_b.shed_cost),
        "expected_outage_magnitude_mw": block(
            met_a.expected_magnitude_mw, met_b.expected_magnitude_mw
        ),
        "expected_outage_time_h": block(met_a.expected_time_h, met_b.expected_time_h),
        "metric_definitions": METRIC_DEFINITIONS,
    }


# ----------------------------------------------------------------------
# exhaustive plan scan (flat profiles) and sensitivity
# ----------------------------------------------------------------------
@dataclass
class PlanCost:
    protected: frozenset[str]
    total: float
    damage: float
    shed: float


def enumerate_plan_costs(
    case: CaseModel,
    sset: ScenarioSet,
    *,
    tiger_dam_costs: dict[str, float] | None = None,
    voll: float | None = None,
    require: frozenset[str] = frozenset(),
    forbid: frozenset[str] = frozenset(),
    cache: OpfCache | None = None,
) -> list[PlanCost]:
    """Exact expected cost of every schedulable protection set.

    Valid for flat demand profiles with a free pre-horizon ramp state,
    where each scenario's optimal dispatch repeats a single hour and the
    expected cost separates into damage + horizon * hourly shed cost.
    Protection sets whose dispatch is infeasible in some scenario (e.g.
    stranded must-run generation) carry infinite total cost.
    """
    if not _flat_profiles(case):
        raise ValueError("exhaustive plan pricing requires flat demand profiles")
    if len(case.substations) > 16:
        raise ValueError("plan space too large to enumerate")
    dams = {s.id: s.tiger_dam_cost for s in case.substations}
    if tiger_dam_costs:
        dams.update(tiger_dam_costs)
    v = case.costs.voll if voll is None else voll
    T = case.operating_horizon
    if cache is None:
        cache = OpfCache(case, enforce_p_min=True)
    demand = tuple(b.demand_profile[0] for b in case.buses)
    fail_weight = {
        s.id: sum(sc.probability for sc in sset if sc.fails(s.id))
        for s in case.substations
    }
    ids = [s.id for s in case.substations]
    out: list[PlanCost] = []
    for mask in range(1 << len(ids)):
        protected = frozenset(ids[i] for i in range(len(ids)) if mask >> i & 1)
        if require - protected or protected & forbid:
            continue
        if schedule_for(case, protected) is None:
            continue
        damage = sum(
            fail_weight[k] * (dams[k] if k in protected else case.substation_by_id(k).damage_cost)
            for k in ids
        )
        shed_cost = 0.0
        feasible = True
        for sc in sset:
            disp = cache.dispatch(available_set(case, sc, protected), demand)
            if disp.status != "optimal":
                feasible = False
                break
            shed_cost += sc.probability * v * disp.shed_mw * T
        total = damage + shed_cost if feasible else math.inf
        out.append(PlanCost(protected, total, damage, shed_cost if feasible else math.inf))
    out.sort(key=lambda pc: (pc.total, sorted(pc.protected)))
    return out


def best_plans(case: CaseModel, sset: ScenarioSet, *, limit: int = 5, **kw) -> list[PlanCost]:
    costs = [pc for pc in enumerate_plan_costs(case, sset, **kw) if math.isfinite(pc.total)]
    return costs[:limit]


def sensitivity_note(
    case: CaseModel,
    sset: ScenarioSet,
    *,
    factors: tuple[float, ...] = (0.5, 1.5),
) -> dict:
    """Scan +-50% perturbations of the economic defaults (each tiger-dam
    cost and the value of lost load) and report every one that changes
    the optimal protection set."""
    cache = OpfCache(case, enforce_p_min=True)
    baseline = best_plans(case, sset, limit=1, cache=cache)
    if not baseline:
        raise ValueError("no feasible protection plan to take sensitivities around")
    base_set = baseline[0].protected
    findings = []
    scanned = []
    for s in case.substations:
        for f in factors:
            scanned.append(f"tiger_dam_cost[{s.id}] x{f}")
            best = best_plans(
                case,
                sset,
                limit=1,
                cache=cache,
                tiger_dam_costs={s.id: s.tiger_dam_cost * f},
            )
            if best and best[0].protected != base_set:
                findings.append(
                    {
                        "parameter": f"tiger_dam_cost[{s.id}]",
                        "factor": f,
                        "value": s.tiger_dam_cost * f,
                        "protected": sorted(best[0].protected),
                    }
                )
    for f in factors:
        scanned.append(f"voll x{f}")
        best = best_plans(case, sset, limit=1, cache=cache, voll=case.costs.voll * f)
        if best and best[0].protected != base_set:
            findings.append(
                {
                    "parameter": "voll",
                    "factor": f,
                    "value": case.costs.voll * f,
                    "protected": sorted(best[0].protected),
                }
            )
    return {
        "baseline_protected": sorted(base_set),
        "perturbation": "each listed parameter scaled by the stated factor, one at a time",
        "parameters_scanned": scanned,
        "set_changing_perturbations": findings,
    }


# ----------------------------------------------------------------------
# reports
# ----------------------------------------------------------------------
@dataclass
class PlanReport:
    plan: Plan
    expected_total_cost: float
    expected_damage_cost: float
    expected_shed_cost: float
    outage: OutageMetrics
    curve: ResilienceCurve
    solver_status: str | None = None
    objective: float | None = None
    gap: float | None = None
    sensitivity: dict | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        sched = {
            f"team_{n + 1}": [site if site is not None else "" for site in track]
            for n, track in enumerate(self.plan.schedule)
        }
        curve_json = {
            sid: [
                {"hour": h, "served_mw": served, "demand_mw": demand,
                 "served_fraction": (served / demand) if demand > 0 else 1.0}
                for h, served, demand in samples
            ]
            for sid, samples in self.curve.samples.items()
        }
        curve_json["expected"] = [
            {"hour": h, "served_mw": served, "demand_mw": demand,
             "served_fraction": (served / demand) if demand > 0 else 1.0}
            for h, served, demand in self.curve.expected
        ]
        return {
            "label": self.plan.label,
            "protected": sorted(self.plan.protected),
            "schedule": sched,
            "expected_cost": {
                "total": self.expected_total_cost,
                "substation": self.expected_damage_cost,
                "energy_not_supplied": self.expected_shed_cost,
            },
            "expected_outage_magnitude_mw": self.outage.expected_magnitude_mw,
            "expected_outage_time_h": self.outage.expected_time_h,
            "per_scenario_outage": {
                sid: {"magnitude_mw": m, "time_h": t}
                for sid, (m, t) in sorted(self.outage.per_scenario.items())
            },
            "resilience_curve": curve_json,
            "solver": {
                "status": self.solver_status,
                "objective": self.objective,
                "gap": self.gap,
            },
            "sensitivity": self.sensitivity,
            "metric_definitions": METRIC_DEFINITIONS,
            "warnings": self.warnings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def build_plan_report(
    case: CaseModel,
    sset: ScenarioSet,
    plan: Plan,
    *,
    instance: MilpInstance | None = None,
    solver_status: str | None = None,
    objective: float | None = None,
    gap: float | None = None,
    sensitivity: dict | None = None,
    warnings: list[str] | None = None,
) -> PlanReport:
    score = score_plan(case, sset, plan, instance=instance)
    curve = resilience_curves(case, sset, plan.protected)
    metrics = outage_metrics(curve)
    return PlanReport(
        plan=plan,
        expected_total_cost=score.total_cost,
        expected_damage_cost=score.damage_cost,
        expected_shed_cost=score.shed_cost,
        outage=metrics,
        curve=curve,
        solver_status=solver_status,
        objective=objective,
        gap=gap,
        sensitivity=sensitivity,
        warnings=list(warnings or []),
    )
