"""Failure-scenario construction for the flood event.

Each scenario names the set of substations that flood.  Under the
independence assumption the raw weight of a scenario is the product of
per-substation failure/survival probabilities; a retained subset of
scenarios is renormalised so the weights used by the planner sum to one.

Scenario sources:
  * exhaustive enumeration (2^K, guarded),
  * nested severity thresholds -- one scenario per forecast depth
    threshold, failing every substation at least that deep (scenarios
    nest as the threshold drops),
  * top-N by raw probability,
  * a JSON file.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

from .model import Substation

ENUMERATION_LIMIT = 20  # 2^20 scenarios is already past any sane use


@dataclass(frozen=True)
class FailureScenario:
    """One flood outcome: ``failed`` holds the ids of flooded substations.

    ``probability`` is the renormalised planning weight; ``raw_probability``
    the independence product it came from (kept for audit).
    """

    id: str
    failed: frozenset[str]
    probability: float
    raw_probability: float = 0.0

    def fails(self, sub_id: str) -> bool:
        return sub_id in self.failed


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple[FailureScenario, ...]
    substation_ids: tuple[str, ...]

    def __iter__(self):
        return iter(self.scenarios)

    def __len__(self):
        return len(self.scenarios)

    def total_probability(self) -> float:
        return sum(s.probability for s in self.scenarios)


# ----------------------------------------------------------------------
# probabilities
# ----------------------------------------------------------------------
def raw_scenario_probability(
    failed: dict[str, bool], failure_probs: dict[str, float]
) -> float:
    """Independence product: prod_k [F_k*pi_k + (1-F_k)*(1-pi_k)].

    ``failed`` and ``failure_probs`` must cover exactly the same
    substations.
    """
    missing = sorted(set(failure_probs) - set(failed))
    extra = sorted(set(failed) - set(failure_probs))
    if missing or extra:
        raise ValueError(
            f"failure flags do not match substations; missing flags for "
            f"{missing}, flags without substation {extra}"
        )
    prob = 1.0
    for k, pi in failure_probs.items():
        prob *= pi if failed[k] else (1.0 - pi)
    return prob


def normalize_probabilities(raw: list[float]) -> list[float]:
    """Scale retained raw weights to sum to one, preserving ratios."""
    total = sum(raw)
    if total <= 0.0:
        raise ValueError(
            "degenerate scenario set: retained scenarios have zero total "
            "probability, nothing to normalise"
        )
    return [r / total for r in raw]


def _build_set(
    subs: list[Substation], fail_sets: list[frozenset[str]]
) -> ScenarioSet:
    probs = {s.id: s.failure_probability for s in subs}
    ids = tuple(s.id for s in subs)
    raws = [
        raw_scenario_probability({k: k in fs for k in probs}, probs)
        for fs in fail_sets
    ]
    norm = normalize_probabilities(raws)
    scen = tuple(
        FailureScenario(
            id=f"S{i + 1}", failed=fs, probability=p, raw_probability=r
        )
        for i, (fs, p, r) in enumerate(zip(fail_sets, norm, raws))
    )
    return ScenarioSet(scenarios=scen, substation_ids=ids)


# ----------------------------------------------------------------------
# scenario sources
# ----------------------------------------------------------------------
def enumerate_all(subs: list[Substation]) -> ScenarioSet:
    """All 2^K failure combinations, in lexicographic order of the
    failure tuple (survive before fail, first substation slowest)."""
    if len(subs) > ENUMERATION_LIMIT:
        raise ValueError(
            f"refusing to enumerate 2^{len(subs)} scenarios; limit is "
            f"2^{ENUMERATION_LIMIT}"
        )
    ids = [s.id for s in subs]
    fail_sets = [
        frozenset(k for k, flag in zip(ids, combo) if flag)
        for combo in itertools.product((False, True), repeat=len(ids))
    ]
    return _build_set(subs, fail_sets)


def nested_severity_reduction(
    subs: list[Substation], depth_thresholds: list[float]
) -> ScenarioSet:
    """One scenario per severity threshold: every substation whose
    forecast depth reaches the threshold fails.  Thresholds must be
    strictly decreasing, so the failure sets nest -- each scenario is a
    superset of the previous, milder one.
    """
    if not depth_thresholds:
        raise ValueError("at least one depth threshold is required")
    for a, b in zip(depth_thresholds, depth_thresholds[1:]):
        if b >= a:
            raise ValueError(
                f"depth thresholds must be strictly decreasing, got {a} -> {b}"
            )
    fail_sets = []
    for d in depth_thresholds:
        fs = frozenset(s.id for s in subs if s.mean_flood_depth >= d)
        if fs in fail_sets:
            raise ValueError(
                f"threshold {d} m produces a duplicate failure set {sorted(fs)}; "
                "choose thresholds that separate the forecast depths"
            )
        fail_sets.append(fs)
    return _build_set(subs, fail_sets)


def top_n_reduction(subs: list[Substation], n: int) -> ScenarioSet:
    """Keep the n most probable of all 2^K outcomes (ties broken by the
    sorted failure set, so the result is deterministic)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    full = enumerate_all(subs)
    ranked = sorted(
        full.scenarios,
        key=lambda s: (-s.raw_probability, sorted(s.failed)),
    )
    kept = ranked[: min(n, len(ranked))]
    return _build_set(list(subs), [s.failed for s in kept])


# ----------------------------------------------------------------------
# JSON I/O
# ----------------------------------------------------------------------
def scenario_set_to_dict(sset: ScenarioSet) -> list[dict]:
    out = []
    for s in sset:
        out.append(
            {
                "id": s.id,
                "failed": {k: (k in s.failed) for k in sset.substation_ids},
                "probability": s.probability,
            }
        )
    return out


def save_scenarios(sset: ScenarioSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_set_to_dict(sset), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scenarios(path: str | Path, subs: list[Substation]) -> ScenarioSet:
    """Read scenarios from JSON.  Probabilities are renormalised; if they
    were off by more than 1e-6 a warning is issued."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, list) or not doc:
        raise ValueError(f"{path}: expected a non-empty JSON list of scenarios")
    known = {s.id for s in subs}
    probs = {s.id: s.failure_probability for s in subs}
    scen = []
    given = []
    for i, entry in enumerate(doc):
        try:
            sid = str(entry.get("id", f"S{i + 1}"))
            raw_failed = entry["failed"]
            p = float(entry["probability"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: malformed scenario #{i}: {exc}") from exc
        if isinstance(raw_failed, dict):
            failed = frozenset(k for k, v in raw_failed.items() if v)
        else:
            failed = frozenset(str(k) for k in raw_failed)
        unknown = sorted(failed - known)
        if unknown:
            raise ValueError(
                f"{path}: scenario {sid} names unknown substations {unknown}"
            )
        if p < 0:
            raise ValueError(f"{path}: scenario {sid} has negative probability {p}")
        scen.append((sid, failed))
        given.append(p)
    total = sum(given)
    if abs(total - 1.0) > 1e-6:
        warnings.warn(
            f"scenario probabilities in {path} sum to {total:.8f}; "
            "renormalising to 1",
            stacklevel=2,
        )
        norm = normalize_probabilities(given)
    else:
        # already consistent up to float noise; keep the stored digits so
        # load -> save round trips are byte-exact
        norm = given
    ids = tuple(s.id for s in subs)
    out = tuple(
        FailureScenario(
            id=sid,
            failed=failed,
            probability=p,
            raw_probability=raw_scenario_probability(
                {k: k in failed for k in probs}, probs
            ),
        )
        for (sid, failed), p in zip(scen, norm)
    )
    return ScenarioSet(scenarios=out, substation_ids=ids)
