"""Domain model for substation flood-protection planning.

A planning case couples a small transmission grid (buses, lines,
generators) with one flood-exposed substation per bus.  Each substation
carries a forecast mean flood depth, a failure probability for the
coming flood, a repair time, a damage ("imposed") cost if it floods
unprotected, and the cost of shielding it with a temporary tiger dam.
A crew configuration says how many teams are available during the
preparation window before flood onset.

Units: MW for power, hours for time, metres for depth, radians for
angles, USD for money.  Susceptance is per-unit on the case-wide MVA
base in ``CostConfig``; all MW quantities are converted to that base
internally when the optimization model is assembled.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

# Tiger-dam installation effort is calibrated for forecast depths in
# this interval (metres); outside it the linear crew-hours rule has no
# support.
MIN_FLOOD_DEPTH_M = 0.45
MAX_FLOOD_DEPTH_M = 1.5


@dataclass(frozen=True)
class Bus:
    """A network node.  ``demand_profile`` holds one MW value per
    operating hour."""

    id: int
    demand_profile: tuple[float, ...] = ()


@dataclass(frozen=True)
class Line:
    """Transmission line between two buses.

    susceptance : series susceptance B_l (per-unit on the case base);
        the DC flow model is f = B_l * (angle_from - angle_to).
    capacity    : thermal limit in MW, applied symmetrically.
    """

    id: str
    from_bus: int
    to_bus: int
    susceptance: float
    capacity: float


@dataclass(frozen=True)
class Generator:
    """Dispatchable unit.  Output bounds apply only while its hosting
    substation is available; ramp limits couple consecutive hours."""

    id: str
    bus_id: int
    p_min: float
    p_max: float
    ramp_up: float
    ramp_down: float


@dataclass(frozen=True)
class Substation:
    """Flood-exposed substation serving exactly one bus."""

    id: str
    bus_id: int
    mean_flood_depth: float
    failure_probability: float
    repair_time: float
    damage_cost: float        # USD imposed if it floods unprotected
    tiger_dam_cost: float     # USD to install the temporary dam


@dataclass(frozen=True)
class CrewConfig:
    """Workforce available during the preparation day.

    num_teams        : parallel installation teams.
    members_per_team : crew size used by the protection-time rule.
    prep_hours       : length of the preparation window (hours).
    edge_epsilon     : tolerance in the dispatch edge-detection rows;
        must stay in (0, 0.5) for the rising-edge logic to be exact.
    """

    num_teams: int = 2
    members_per_team: int = 4
    prep_hours: int = 5
    edge_epsilon: float = 0.25


@dataclass(frozen=True)
class CostConfig:
    """Model-wide economic and network scalars.

    voll              : value of lost load, USD per MWh.
    big_m_angle_bound : symmetric bound on bus voltage angles (radians);
        also sizes the per-line big-M constants.
    power_base_mva    : MVA base tying MW data to per-unit susceptances.
    """

    voll: float = 1000.0
    big_m_angle_bound: float = 0.6
    power_base_mva: float = 100.0


@dataclass
class CaseModel:
    """A complete planning case."""

    buses: list[Bus]
    lines: list[Line]
    generators: list[Generator]
    substations: list[Substation]
    crew: CrewConfig
    costs: CostConfig
    operating_horizon: int

    # ------------------------------------------------------------------
    # lookups
    # ------------------------------------------------------------------
    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    def substation_by_id(self, sid: str) -> Substation:
        for s in self.substations:
            if s.id == sid:
                return s
        raise KeyError(f"unknown substation {sid!r}")

    def substation_at_bus(self, bus_id: int) -> Substation:
        for s in self.substations:
            if s.bus_id == bus_id:
                return s
        raise KeyError(f"no substation at bus {bus_id}")

    def demand(self, bus_id: int, hour: int) -> float:
        for b in self.buses:
            if b.id == bus_id:
                return b.demand_profile[hour]
        raise KeyError(f"unknown bus {bus_id}")

    def slack_bus(self) -> int:
        """Reference bus for the DC power flow: the lowest-numbered bus
        hosting a generator."""
        gen_buses = sorted(g.bus_id for g in self.generators)
        if not gen_buses:
            raise ValueError("case has no generators; no slack bus can be chosen")
        return gen_buses[0]


# ----------------------------------------------------------------------
# protection effort and cost coefficients
# ----------------------------------------------------------------------
def protection_time(mean_flood_depth: float, members_per_team: int) -> int:
    """Whole hours one team needs to dam a substation.

    The underlying effort rule is linear in forecast depth,
    ``4 + 10*(depth - 0.45)`` person-hours, shared across the team and
    rounded up to the hour grid used by the schedule.  Valid only for
    depths in [0.45, 1.5] m.

    >>> protection_time(0.5, 4)
    2
    """
    if not (MIN_FLOOD_DEPTH_M <= mean_flood_depth <= MAX_FLOOD_DEPTH_M):
        raise ValueError(
            f"mean flood depth {mean_flood_depth} m outside supported range "
            f"[{MIN_FLOOD_DEPTH_M}, {MAX_FLOOD_DEPTH_M}] m"
        )
    if members_per_team < 1:
        raise ValueError("members_per_team must be at least 1")
    person_hours = 4.0 + 10.0 * (mean_flood_depth - MIN_FLOOD_DEPTH_M)
    return max(1, math.ceil(person_hours / members_per_team - 1e-12))


def imposed_cost_coefficients(sub: Substation) -> tuple[float, float]:
    """(protect cost, fail cost) pair entering the per-substation cost
    identity beta_k = theta_k*C_k + (1-theta_k)*DC_k."""
    return (sub.tiger_dam_cost, sub.damage_cost)


# ----------------------------------------------------------------------
# validation
# ----------------------------------------------------------------------
def validate_case(case: CaseModel) -> list[str]:
    """Collect human-readable violations; an empty list means the case is
    usable by the planning pipeline."""
    errs: list[str] = []

    if case.operating_horizon < 1:
        errs.append(f"operating_horizon: must be >= 1, got {case.operating_horizon}")

    bus_ids = [b.id for b in case.buses]
    if len(set(bus_ids)) != len(bus_ids):
        errs.append("buses: duplicate bus ids")
    bus_set = set(bus_ids)

    for b in case.buses:
        if len(b.demand_profile) != case.operating_horizon:
            errs.append(
                f"buses[{b.id}].demand_profile: length {len(b.demand_profile)} "
                f"!= operating_horizon {case.operating_horizon}"
            )
        for t, d in enumerate(b.demand_profile):
            if d < 0:
                errs.append(f"buses[{b.id}].demand_profile[{t}]: negative demand {d}")

    line_ids = [ln.id for ln in case.lines]
    if len(set(line_ids)) != len(line_ids):
        errs.append("lines: duplicate line ids")
    for ln in case.lines:
        tag = f"lines[{ln.id}]"
        if ln.from_bus == ln.to_bus:
            errs.append(f"{tag}: from_bus equals to_bus")
        for end in (ln.from_bus, ln.to_bus):
            if end not in bus_set:
                errs.append(f"{tag}: endpoint bus {end} not defined")
        if ln.susceptance <= 0:
            errs.append(f"{tag}.susceptance: must be > 0, got {ln.susceptance}")
        if ln.capacity <= 0:
            errs.append(f"{tag}.capacity: must be > 0, got {ln.capacity}")

    gen_ids = [g.id for g in case.generators]
    if len(set(gen_ids)) != len(gen_ids):
        errs.append("generators: duplicate generator ids")
    for g in case.generators:
        tag = f"generators[{g.id}]"
        if g.bus_id not in bus_set:
            errs.append(f"{tag}.bus_id: bus {g.bus_id} not defined")
        if not (0 <= g.p_min <= g.p_max):
            errs.append(f"{tag}: need 0 <= p_min ({g.p_min}) <= p_max ({g.p_max})")
        if g.ramp_up <= 0 or g.ramp_down <= 0:
            errs.append(f"{tag}: ramp limits must be > 0")

    sub_ids = [s.id for s in case.substations]
    if len(set(sub_ids)) != len(sub_ids):
        errs.append("substations: duplicate substation ids")
    sub_buses = [s.bus_id for s in case.substations]
    if len(set(sub_buses)) != len(sub_buses):
        errs.append("substations: more than one substation on the same bus")
    if set(sub_buses) != bus_set:
        missing = sorted(bus_set - set(sub_buses))
        extra = sorted(set(sub_buses) - bus_set)
        if missing:
            errs.append(f"substations: buses without a substation: {missing}")
        if extra:
            errs.append(f"substations: substations on undefined buses: {extra}")

    for s in case.substations:
        tag = f"substations[{s.id}]"
        if s.mean_flood_depth < 0:
            errs.append(f"{tag}.mean_flood_depth: must be >= 0, got {s.mean_flood_depth}")
        if not (0.0 <= s.failure_probability <= 1.0):
            errs.append(
                f"{tag}.failure_probability: {s.failure_probability} outside [0, 1]"
            )
        if s.repair_time < 0:
            errs.append(f"{tag}.repair_time: must be >= 0, got {s.repair_time}")
        if s.damage_cost < 0:
            errs.append(f"{tag}.damage_cost: must be >= 0")
        if s.tiger_dam_cost < 0:
            errs.append(f"{tag}.tiger_dam_cost: must be >= 0")

    c = case.crew
    if c.num_teams < 0:
        errs.append(f"crew.num_teams: must be >= 0, got {c.num_teams}")
    if c.members_per_team < 1:
        errs.append(f"crew.members_per_team: must be >= 1, got {c.members_per_team}")
    if c.prep_hours < 0:
        errs.append(f"crew.prep_hours: must be >= 0, got {c.prep_hours}")
    if not (0.0 < c.edge_epsilon < 0.5):
        errs.append(
            f"crew.edge_epsilon: {c.edge_epsilon} outside (0, 0.5); edge "
            "detection is only exact inside that interval"
        )

    k = case.costs
    if k.voll <= 0:
        errs.append(f"costs.voll: must be > 0, got {k.voll}")
    if k.big_m_angle_bound <= 0:
        errs.append(f"costs.big_m_angle_bound: must be > 0, got {k.big_m_angle_bound}")
    if k.power_base_mva <= 0:
        errs.append(f"costs.power_base_mva: must be > 0, got {k.power_base_mva}")

    # connectivity of the intact grid (failures may still island it)
    if case.buses and case.lines and not errs:
        adj: dict[int, set[int]] = {b: set() for b in bus_set}
        for ln in case.lines:
            adj[ln.from_bus].add(ln.to_bus)
            adj[ln.to_bus].add(ln.from_bus)
        seen = {case.buses[0].id}
        stack = [case.buses[0].id]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        if seen != bus_set:
            errs.append(
                f"lines: intact network is not connected; unreachable buses "
                f"{sorted(bus_set - seen)}"
            )

    return errs


# ----------------------------------------------------------------------
# JSON I/O
# ----------------------------------------------------------------------
def _as_profile(raw, horizon: int) -> tuple[float, ...]:
    if isinstance(raw, (int, float)):
        return tuple(float(raw) for _ in range(horizon))
    return tuple(float(v) for v in raw)


def case_from_dict(doc: dict) -> CaseModel:
    """Build a CaseModel from a parsed JSON document.

    A scalar ``demand_profile`` is expanded to a flat profile over the
    operating horizon; a line without an ``id`` is keyed "from-to".
    """
    try:
        horizon = int(doc["operating_horizon"])
        buses = [
            Bus(
                id=int(b["id"]),
                demand_profile=_as_profile(b.get("demand_profile", 0.0), horizon),
            )
            for b in doc["buses"]
        ]
        lines = [
            Line(
                id=str(l.get("id", f"{l['from_bus']}-{l['to_bus']}")),
                from_bus=int(l["from_bus"]),
                to_bus=int(l["to_bus"]),
                susceptance=float(l["susceptance"]),
                capacity=float(l["capacity"]),
            )
            for l in doc["lines"]
        ]
        gens = [
            Generator(
                id=str(g["id"]),
                bus_id=int(g["bus_id"]),
                p_min=float(g["p_min"]),
                p_max=float(g["p_max"]),
                ramp_up=float(g["ramp_up"]),
                ramp_down=float(g["ramp_down"]),
            )
            for g in doc["generators"]
        ]
        subs = [
            Substation(
                id=str(s["id"]),
                bus_id=int(s["bus_id"]),
                mean_flood_depth=float(s["mean_flood_depth"]),
                failure_probability=float(s["failure_probability"]),
                repair_time=float(s["repair_time"]),
                damage_cost=float(s["damage_cost"]),
                tiger_dam_cost=float(s["tiger_dam_cost"]),
            )
            for s in doc["substations"]
        ]
        crew_doc = doc.get("crew", {})
        crew = CrewConfig(
            num_teams=int(crew_doc.get("num_teams", 2)),
            members_per_team=int(crew_doc.get("members_per_team", 4)),
            prep_hours=int(crew_doc.get("prep_hours", 5)),
            edge_epsilon=float(crew_doc.get("edge_epsilon", 0.25)),
        )
        costs_doc = doc.get("costs", {})
        costs = CostConfig(
            voll=float(costs_doc.get("voll", 1000.0)),
            big_m_angle_bound=float(costs_doc.get("big_m_angle_bound", 0.6)),
            power_base_mva=float(costs_doc.get("power_base_mva", 100.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed case document: {exc}") from exc
    return CaseModel(
        buses=buses,
        lines=lines,
        generators=gens,
        substations=subs,
        crew=crew,
        costs=costs,
        operating_horizon=horizon,
    )


def case_to_dict(case: CaseModel) -> dict:
    return {
        "operating_horizon": case.operating_horizon,
        "buses": [
            {"id": b.id, "demand_profile": list(b.demand_profile)} for b in case.buses
        ],
        "lines": [asdict(ln) for ln in case.lines],
        "generators": [asdict(g) for g in case.generators],
        "substations": [asdict(s) for s in case.substations],
        "crew": asdict(case.crew),
        "costs": asdict(case.costs),
    }


def load_case(path: str | Path) -> CaseModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return case_from_dict(doc)


def save_case(case: CaseModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(case_to_dict(case), fh, indent=2, sort_keys=True)
        fh.write("\n")


def bundled_case_path() -> Path:
    """Path of the six-bus example case shipped with the package."""
    return Path(__file__).parent / "cases" / "sixbus.json"


def bundled_scenarios_path() -> Path:
    return Path(__file__).parent / "cases" / "sixbus.scenarios.json"
