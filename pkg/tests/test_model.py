"""Case schema, derived quantities, and validation.

Proves:
  1.  Dam installation hours for the bundled depths and a 4-member team
      are exactly (2, 3, 2, 3, 2, 3) hours for k1..k6.
  2.  Installation hours never drop below 1 h, grow with flood depth, and
      shrink (weakly) with team size.
  3.  Depths outside the supported band and non-positive team sizes raise.
  4.  The bundled case validates cleanly.
  5.  Targeted corruptions (negative capacity, probability > 1, dangling
      bus reference, duplicate ids, short demand profile) are each flagged
      with a message naming the offending component.
  6.  Case documents survive a save/load round trip bit-for-bit.
  7.  Scalar demand entries expand to a constant hourly profile.
  8.  Missing top-level sections raise ValueError mentioning the document.
  9.  The slack bus is the lowest-numbered generator bus; a case without
      generators has no slack bus and says so.
  10. Bus/substation lookups and the demand accessor agree with the raw
      document.
"""

from __future__ import annotations

import copy
import json

import pytest

from floodplan import model


@pytest.fixture(scope="module")
def case_doc(bundled_case):
    return model.case_to_dict(bundled_case)


def test_installation_hours_bundled_column(bundled_case):
    """Proves (1): exact hour requirements for the bundled substations."""
    expected = {"k1": 2, "k2": 3, "k3": 2, "k4": 3, "k5": 2, "k6": 3}
    got = {
        s.id: model.protection_time(s.mean_flood_depth, bundled_case.crew.members_per_team)
        for s in bundled_case.substations
    }
    assert got == expected


def test_installation_hours_monotonicity():
    """Proves (2): >= 1 h always; monotone in depth; weakly decreasing in
    team size."""
    assert model.protection_time(0.45, 12) == 1
    depths = [0.45, 0.6, 0.8, 1.0, 1.2, 1.4]
    hours = [model.protection_time(d, 4) for d in depths]
    assert hours == sorted(hours)
    for depth in depths:
        by_team = [model.protection_time(depth, m) for m in range(1, 9)]
        assert by_team == sorted(by_team, reverse=True)
        assert min(by_team) >= 1


def test_installation_hours_rejects_bad_inputs():
    """Proves (3): out-of-band depth and empty teams raise ValueError."""
    with pytest.raises(ValueError, match="outside supported range"):
        model.protection_time(-0.1, 4)
    with pytest.raises(ValueError, match="outside supported range"):
        model.protection_time(2.5, 4)
    with pytest.raises(ValueError, match="at least 1"):
        model.protection_time(0.5, 0)


def test_bundled_case_is_clean(bundled_case):
    """Proves (4): shipped data passes every validation rule."""
    assert model.validate_case(bundled_case) == []


@pytest.mark.parametrize(
    "mutate, needle",
    [
        (lambda d: d["lines"][0].__setitem__("capacity", -5.0), "capacity"),
        (
            lambda d: d["substations"][0].__setitem__("failure_probability", 1.5),
            "failure_probability",
        ),
        (lambda d: d["lines"][0].__setitem__("to_bus", 99), "bus 99"),
        (lambda d: d["substations"][1].__setitem__("id", "k1"), "duplicate"),
        (
            lambda d: d["buses"][0].__setitem__("demand_profile", [1.0, 2.0]),
            "length 2",
        ),
        (lambda d: d["generators"][0].__setitem__("p_max", 10.0), "p_min"),
        (lambda d: d["crew"].__setitem__("num_teams", -1), "num_teams"),
    ],
)
def test_validation_flags_corruption(case_doc, mutate, needle):
    """Proves (5): each corruption yields an issue naming the component."""
    doc = copy.deepcopy(case_doc)
    mutate(doc)
    issues = model.validate_case(model.case_from_dict(doc))
    assert issues, "corruption went unnoticed"
    assert any(needle in issue for issue in issues), issues


def test_case_round_trip(bundled_case, tmp_path):
    """Proves (6): save -> load -> save reproduces identical bytes and an
    equal document."""
    p1 = tmp_path / "case1.json"
    p2 = tmp_path / "case2.json"
    model.save_case(bundled_case, p1)
    reloaded = model.load_case(p1)
    model.save_case(reloaded, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert model.case_to_dict(reloaded) == model.case_to_dict(bundled_case)
    # and the shipped file itself is the serializer's own output
    assert p1.read_bytes() == model.bundled_case_path().read_bytes()


def test_scalar_demand_profile_expands(case_doc):
    """Proves (7): a scalar demand entry becomes a constant profile of
    operating-horizon length."""
    doc = copy.deepcopy(case_doc)
    doc["buses"][2]["demand_profile"] = 55
    case = model.case_from_dict(doc)
    profile = case.buses[2].demand_profile
    assert len(profile) == case.operating_horizon
    assert set(profile) == {55.0}


@pytest.mark.parametrize("section", ["buses", "lines", "generators", "substations"])
def test_missing_sections_raise(case_doc, section):
    """Proves (8): absent required sections raise a malformed-document
    error naming the section."""
    doc = copy.deepcopy(case_doc)
    del doc[section]
    with pytest.raises(ValueError, match="malformed case document"):
        model.case_from_dict(doc)


def test_malformed_document_type():
    """Proves (8): a non-mapping document is rejected, not half-parsed."""
    with pytest.raises(ValueError, match="malformed case document"):
        model.case_from_dict([1, 2, 3])


def test_slack_bus_selection(bundled_case, case_doc):
    """Proves (9): slack = lowest generator bus; no generators -> error."""
    assert bundled_case.slack_bus() == 1
    doc = copy.deepcopy(case_doc)
    doc["generators"] = [g for g in doc["generators"] if g["bus_id"] != 1]
    assert model.case_from_dict(doc).slack_bus() == 4
    doc["generators"] = []
    with pytest.raises(ValueError, match="no generators"):
        model.case_from_dict(doc).slack_bus()


def test_lookup_accessors(bundled_case):
    """Proves (10): id lists, per-bus substation lookup and the demand
    accessor mirror the raw document."""
    assert bundled_case.bus_ids() == [1, 2, 3, 4, 5, 6]
    assert bundled_case.substation_at_bus(4).id == "k4"
    raw = json.loads(model.bundled_case_path().read_text())
    by_id = {b["id"]: b["demand_profile"] for b in raw["buses"]}
    for bus in bundled_case.buses:
        prof = by_id[bus.id]
        expected = prof if isinstance(prof, list) else [prof] * bundled_case.operating_horizon
        for t in range(bundled_case.operating_horizon):
            assert bundled_case.demand(bus.id, t) == expected[t]


def test_crew_and_cost_defaults(case_doc):
    """Proves (8, supplement): crew and cost sections are optional and
    fall back to the documented defaults."""
    doc = copy.deepcopy(case_doc)
    del doc["crew"]
    del doc["costs"]
    case = model.case_from_dict(doc)
    assert case.crew.num_teams == 2
    assert case.crew.members_per_team == 4
    assert case.crew.prep_hours == 5
    assert case.crew.edge_epsilon == 0.25
    assert case.costs.voll == 1000.0
    assert case.costs.big_m_angle_bound == 0.6
    assert case.costs.power_base_mva == 100.0
