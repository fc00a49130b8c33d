"""Shared fixtures: the bundled six-bus case, cheap variants of it, random
MILP generators with an enumeration oracle, and an in-process CLI runner.

Expensive artifacts (the full stochastic solve, the deterministic baseline)
are session-scoped so the suite pays for each of them once.
"""

from __future__ import annotations

import contextlib
import io
import itertools
import math
import random

import numpy as np
import pytest
import scipy.optimize

from floodplan import cli
from floodplan import evaluate as ev
from floodplan import milp, model
from floodplan import scenarios as scen
from floodplan.milp import LinearConstraint, MilpInstance, VarCatalog


# ----------------------------------------------------------------------
# bundled case and its derived artifacts
# ----------------------------------------------------------------------
@pytest.fixture(scope="session")
def bundled_case():
    return model.load_case(model.bundled_case_path())


@pytest.fixture(scope="session")
def bundled_sset(bundled_case):
    return scen.load_scenarios(model.bundled_scenarios_path(), bundled_case.substations)


@pytest.fixture(scope="session")
def bundled_instance(bundled_case, bundled_sset):
    return milp.build(bundled_case, bundled_sset)


@pytest.fixture(scope="session")
def bundled_solve(bundled_case, bundled_sset):
    """(solution, mip_result, instance) of the full stochastic model."""
    sol, res, inst = ev.optimize_case(bundled_case, bundled_sset)
    assert res.status == "optimal" and sol is not None
    return sol, res, inst


@pytest.fixture(scope="session")
def bundled_baseline(bundled_case):
    """(plan, solution, mip_result) of the certain-failure baseline."""
    return ev.deterministic_baseline(bundled_case)


# ----------------------------------------------------------------------
# case variants
# ----------------------------------------------------------------------
def _make_variant(
    base_case,
    *,
    horizon: int | None = None,
    p_min_zero: bool = False,
    teams: int | None = None,
    members: int | None = None,
    prep_hours: int | None = None,
    dam_cost: float | None = None,
    voll: float | None = None,
    demand_scale: float | None = None,
):
    doc = model.case_to_dict(base_case)
    if horizon is not None:
        doc["operating_horizon"] = horizon
        for bus in doc["buses"]:
            prof = bus["demand_profile"]
            bus["demand_profile"] = [prof[t % len(prof)] for t in range(horizon)]
    if p_min_zero:
        for gen in doc["generators"]:
            gen["p_min"] = 0.0
    if teams is not None:
        doc["crew"]["num_teams"] = teams
    if members is not None:
        doc["crew"]["members_per_team"] = members
    if prep_hours is not None:
        doc["crew"]["prep_hours"] = prep_hours
    if dam_cost is not None:
        for sub in doc["substations"]:
            sub["tiger_dam_cost"] = dam_cost
    if voll is not None:
        doc["costs"]["voll"] = voll
    if demand_scale is not None:
        for bus in doc["buses"]:
            bus["demand_profile"] = [demand_scale * d for d in bus["demand_profile"]]
    return model.case_from_dict(doc)


@pytest.fixture(scope="session")
def variant(bundled_case):
    """Factory for modified copies of the bundled case."""

    def make(**kwargs):
        return _make_variant(bundled_case, **kwargs)

    return make


@pytest.fixture(scope="session")
def small_case(variant):
    """Two-hour horizon, p_min = 0: every plan (including the empty one)
    is dispatch-feasible, and solves finish in a couple of seconds."""
    return variant(horizon=2, p_min_zero=True)


def one_bus_case_dict(
    *,
    horizon: int = 1,
    demand: float = 10.0,
    p_max: float = 10.0,
    repair_time: float = 5.0,
    failure_probability: float = 0.3,
    teams: int = 1,
    prep_hours: int = 2,
) -> dict:
    return {
        "name": "one-bus",
        "operating_horizon": horizon,
        "buses": [{"id": 1, "demand_profile": demand}],
        "lines": [],
        "generators": [
            {
                "id": "g1",
                "bus_id": 1,
                "p_min": 0.0,
                "p_max": p_max,
                "ramp_up": p_max,
                "ramp_down": p_max,
            }
        ],
        "substations": [
            {
                "id": "k1",
                "bus_id": 1,
                "mean_flood_depth": 0.5,
                "failure_probability": failure_probability,
                "repair_time": repair_time,
                "damage_cost": 1000.0,
                "tiger_dam_cost": 10.0,
            }
        ],
        "crew": {
            "num_teams": teams,
            "members_per_team": 4,
            "prep_hours": prep_hours,
            "edge_epsilon": 0.25,
        },
        "costs": {"voll": 1000.0, "big_m_angle_bound": 0.6, "power_base_mva": 100.0},
    }


@pytest.fixture()
def one_bus_case():
    return model.case_from_dict(one_bus_case_dict())


# ----------------------------------------------------------------------
# random MILP generator + enumeration oracle
# ----------------------------------------------------------------------
def make_random_milp(
    rng: random.Random,
    *,
    n_bin: int,
    n_cont: int,
    n_rows: int,
) -> MilpInstance:
    """A dense random MILP with finite bounds on every variable, so the
    LP relaxation is always bounded and enumeration is a valid oracle."""
    catalog = VarCatalog()
    for j in range(n_bin):
        catalog.add(f"b{j}", 0.0, 1.0, binary=True, role="b")
    for j in range(n_cont):
        lo = rng.uniform(-5.0, 0.0)
        catalog.add(f"c{j}", lo, lo + rng.uniform(0.5, 8.0), binary=False, role="c")
    n = n_bin + n_cont
    objective = np.array([rng.uniform(-10.0, 10.0) for _ in range(n)])
    # rows are anchored near a random relaxation point so the pool is
    # mostly feasible; integral feasibility is still not guaranteed, and a
    # minority of fully random right-hand sides keeps infeasible cases in
    anchor = [
        rng.random() if catalog[j].is_binary
        else rng.uniform(catalog[j].lower, catalog[j].upper)
        for j in range(n)
    ]
    constraints = []
    for i in range(n_rows):
        coeffs = [
            (j, rng.uniform(-4.0, 4.0)) for j in range(n) if rng.random() < 0.7
        ]
        if not coeffs:
            coeffs = [(rng.randrange(n), rng.uniform(0.5, 2.0))]
        sense = rng.choice(["<=", ">=", "=="])
        at_anchor = sum(v * anchor[j] for j, v in coeffs)
        if sense == "==":
            rhs = at_anchor
        elif rng.random() < 0.35:
            rhs = rng.uniform(-6.0, 6.0)
        elif sense == "<=":
            rhs = at_anchor + rng.uniform(0.0, 4.0)
        else:
            rhs = at_anchor - rng.uniform(0.0, 4.0)
        constraints.append(
            LinearConstraint(f"r{i}", "random", tuple(coeffs), sense, rhs)
        )
    return MilpInstance(catalog, constraints, objective, 0.0)


def brute_force_milp(instance: MilpInstance) -> tuple[str, float | None]:
    """Independent optimum: enumerate every binary pattern and solve the
    remaining LP with scipy.  Returns ('optimal', obj) or ('infeasible', None).

    The per-pattern constant shifts are batched with numpy and patterns
    that already violate a binary-only row are skipped, so instances with
    12 binaries stay affordable.
    """
    bin_idx = [v.index for v in instance.catalog if v.is_binary]
    cont_idx = [v.index for v in instance.catalog if not v.is_binary]
    cont_pos = {j: p for p, j in enumerate(cont_idx)}
    m = len(instance.constraints)

    a_bin = np.zeros((m, len(bin_idx)))
    a_cont = np.zeros((m, len(cont_idx)))
    rhs = np.array([con.rhs for con in instance.constraints])
    senses = [con.sense for con in instance.constraints]
    bin_pos = {j: p for p, j in enumerate(bin_idx)}
    for i, con in enumerate(instance.constraints):
        for j, v in con.coeffs:
            if j in bin_pos:
                a_bin[i, bin_pos[j]] = v
            else:
                a_cont[i, cont_pos[j]] = v
    binary_only = ~np.any(a_cont, axis=1)

    patterns = np.array(
        list(itertools.product((0.0, 1.0), repeat=len(bin_idx)))
    ).reshape(-1, len(bin_idx))
    shifts = patterns @ a_bin.T  # (P, m)
    bin_cost = patterns @ np.array([instance.objective[j] for j in bin_idx])

    # vectorized feasibility of rows that involve no continuous variable
    mask = np.ones(len(patterns), dtype=bool)
    for i in np.nonzero(binary_only)[0]:
        lhs = shifts[:, i]
        if senses[i] == "<=":
            mask &= lhs <= rhs[i] + 1e-9
        elif senses[i] == ">=":
            mask &= lhs >= rhs[i] - 1e-9
        else:
            mask &= np.abs(lhs - rhs[i]) <= 1e-9

    ub_rows = [i for i in range(m) if senses[i] == "<=" and not binary_only[i]]
    ge_rows = [i for i in range(m) if senses[i] == ">=" and not binary_only[i]]
    eq_rows = [i for i in range(m) if senses[i] == "==" and not binary_only[i]]
    a_ub = np.vstack([a_cont[ub_rows], -a_cont[ge_rows]]) if ub_rows or ge_rows else None
    a_eq = a_cont[eq_rows] if eq_rows else None
    c_cont = np.array([instance.objective[j] for j in cont_idx])
    lo = np.array([instance.catalog[j].lower for j in cont_idx])
    up = np.array([instance.catalog[j].upper for j in cont_idx])
    bounds = list(zip(lo, up))

    # interval arithmetic per mixed row: a pattern whose shift pushes one
    # row outside its attainable range over the variable box cannot have a
    # feasible completion, so its LP call is skipped (sound pruning only)
    if cont_idx:
        cont_min = np.minimum(a_cont * lo, a_cont * up).sum(axis=1)
        cont_max = np.maximum(a_cont * lo, a_cont * up).sum(axis=1)
        for i in range(m):
            if binary_only[i]:
                continue
            lhs_min = shifts[:, i] + cont_min[i]
            lhs_max = shifts[:, i] + cont_max[i]
            if senses[i] == "<=":
                mask &= lhs_min <= rhs[i] + 1e-9
            elif senses[i] == ">=":
                mask &= lhs_max >= rhs[i] - 1e-9
            else:
                mask &= (lhs_min <= rhs[i] + 1e-9) & (lhs_max >= rhs[i] - 1e-9)
        # any feasible completion costs at least the box minimum of the
        # continuous objective; visiting patterns in binary-cost order
        # lets the scan stop once that bound rules the remainder out
        lb_cont = float(np.minimum(c_cont * lo, c_cont * up).sum())
    else:
        lb_cont = 0.0

    best = None
    candidates = np.nonzero(mask)[0]
    candidates = candidates[np.argsort(bin_cost[candidates], kind="stable")]
    for p in candidates:
        if best is not None and bin_cost[p] + lb_cont >= best - 1e-12:
            break
        if cont_idx:
            b_ub = (
                np.concatenate(
                    [
                        rhs[ub_rows] - shifts[p, ub_rows],
                        shifts[p, ge_rows] - rhs[ge_rows],
                    ]
                )
                if a_ub is not None
                else None
            )
            b_eq = rhs[eq_rows] - shifts[p, eq_rows] if a_eq is not None else None
            res = scipy.optimize.linprog(
                c=c_cont,
                A_ub=a_ub,
                b_ub=b_ub,
                A_eq=a_eq,
                b_eq=b_eq,
                bounds=bounds,
                method="highs",
            )
            if res.status != 0:
                continue
            obj = float(res.fun) + float(bin_cost[p])
        else:
            obj = float(bin_cost[p])
            # in cost order the first feasible pure-binary pattern wins
        if best is None or obj < best:
            best = obj
    if best is None:
        return "infeasible", None
    return "optimal", best


@pytest.fixture(scope="session")
def random_milp():
    return make_random_milp


@pytest.fixture(scope="session")
def milp_oracle():
    return brute_force_milp


# ----------------------------------------------------------------------
# CLI runner
# ----------------------------------------------------------------------
@pytest.fixture()
def run_cli():
    """Invoke the CLI in-process; returns (exit_code, stdout, stderr)."""

    def run(argv: list[str]) -> tuple[int, str, str]:
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = cli.main([str(a) for a in argv])
        return code, out.getvalue(), err.getvalue()

    return run


# ----------------------------------------------------------------------
# schedule auditing helpers (used by several files)
# ----------------------------------------------------------------------
def audit_schedule(case, protected, schedule) -> list[str]:
    """All crew-rule violations of an explicit schedule: track length,
    one site per team-hour, contiguity, single visit, full coverage."""
    problems = []
    tau = {
        s.id: model.protection_time(s.mean_flood_depth, case.crew.members_per_team)
        for s in case.substations
    }
    if len(schedule) > case.crew.num_teams:
        problems.append("more tracks than teams")
    hours_by_sub: dict[str, list[tuple[int, int]]] = {}
    for team, track in schedule.items():
        if len(track) != case.crew.prep_hours:
            problems.append(f"track {team} has wrong length")
            continue
        for hour, sub in enumerate(track, start=1):
            if sub is not None:
                hours_by_sub.setdefault(sub, []).append((team, hour))
    for sub_id in protected:
        slots = hours_by_sub.get(sub_id, [])
        if len(slots) != tau[sub_id]:
            problems.append(f"{sub_id}: {len(slots)} h scheduled, needs {tau[sub_id]}")
            continue
        teams_used = {t for t, _ in slots}
        if len(teams_used) != 1:
            problems.append(f"{sub_id}: split across teams {sorted(teams_used)}")
        hours = sorted(h for _, h in slots)
        if hours != list(range(hours[0], hours[0] + len(hours))):
            problems.append(f"{sub_id}: non-contiguous hours {hours}")
    for sub_id in hours_by_sub:
        if sub_id not in protected:
            problems.append(f"{sub_id} scheduled but not protected")
    return problems


@pytest.fixture(scope="session")
def schedule_auditor():
    return audit_schedule
