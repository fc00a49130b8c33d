"""Command-line behavior: exit codes, artifacts, overrides, determinism.

Proves:
  1.  `validate` reports the bundled case clean with its dimensions and
      exits 0; unreadable JSON and physical inconsistencies exit 2 with
      the problem named.
  2.  `scenarios` prints the probability table (summing to 1), writes
      scenarios.json byte-identical to the bundled set, and surfaces a
      renormalization warning when the input probabilities are off.
  3.  `plan` writes plan.json / report.json / curve.csv, reports the
      protected set, and exits 0 on a solvable case.
  4.  An unsatisfiable model (no crews but must-run generation) exits 4
      and names the violated constraint family; the same flag on a case
      without must-run units exits 0 with an empty plan.
  5.  `compare --baseline-only` writes only baseline artifacts; the full
      comparison writes compare.json whose expected-cost delta never
      favors the baseline.
  6.  Repeated runs produce byte-identical artifacts.
  7.  TOML config supplies defaults and explicit flags win.
  8.  A zero node limit on the bundled case exits 3 (resource limit)
      while still writing the incumbent plan's artifacts.
  9.  Bad --scenarios prefixes and bad --dam-cost values exit 2 with
      actionable messages.
  10. `export-mps` writes a parseable model plus a name glossary that
      matches the model dimensions.
"""

from __future__ import annotations

import json
import math

import pytest

from floodplan import model, mps
from floodplan import scenarios as scen

def _bundled_scenario_file():
    case_path = model.bundled_case_path()
    return case_path.with_name(case_path.stem + ".scenarios.json")


@pytest.fixture()
def small_case_file(tmp_path, variant):
    case = variant(horizon=2, p_min_zero=True)
    path = tmp_path / "small.json"
    model.save_case(case, path)
    return path


# ----------------------------------------------------------------------
# validate
# ----------------------------------------------------------------------
def test_validate_bundled_ok(run_cli, bundled_case):
    code, out, err = run_cli(["validate"])
    assert code == 0 and err == ""
    assert (
        f"ok ({len(bundled_case.buses)} buses, {len(bundled_case.lines)} lines, "
        f"{len(bundled_case.generators)} generators, "
        f"{len(bundled_case.substations)} substations, "
        f"{bundled_case.operating_horizon} h horizon)" in out
    )


def test_validate_unparseable_file(tmp_path, run_cli):
    bad = tmp_path / "broken.json"
    bad.write_text("{ this is not json")
    code, out, err = run_cli(["validate", "--case", str(bad)])
    assert code == 2
    assert "error: case" in err and "broken.json" in err


def test_validate_lists_problems(tmp_path, run_cli, bundled_case):
    doc = model.case_to_dict(bundled_case)
    doc["lines"][0]["capacity"] = -50.0
    bad = tmp_path / "negcap.json"
    bad.write_text(json.dumps(doc))
    code, out, err = run_cli(["validate", "--case", str(bad)])
    assert code == 2
    assert "capacity" in out
    assert "problem(s) found" in out


# ----------------------------------------------------------------------
# scenarios
# ----------------------------------------------------------------------
def test_scenarios_table_and_artifact(tmp_path, run_cli, bundled_case):
    code, out, err = run_cli(["scenarios", "--out", str(tmp_path)])
    assert code == 0 and err == ""
    assert "scenario source: file" in out
    lines = out.splitlines()
    total_line = next(l for l in lines if l.startswith("total"))
    assert "1.000000" in total_line
    written = tmp_path / "scenarios.json"
    assert written.exists()
    assert written.read_bytes() == _bundled_scenario_file().read_bytes()
    sset = scen.load_scenarios(written, bundled_case.substations)
    for sc in sset:
        assert sc.id in out


def test_scenarios_renormalization_warning(tmp_path, run_cli, bundled_case):
    doc = json.loads(_bundled_scenario_file().read_text())
    for entry in doc:
        entry["probability"] *= 2.0
    skewed = tmp_path / "skewed.json"
    skewed.write_text(json.dumps(doc))
    code, out, err = run_cli(
        ["scenarios", "--scenarios", f"file:{skewed}", "--out", str(tmp_path)]
    )
    assert code == 0
    assert "warning:" in err and "renormalis" in err
    sset = scen.load_scenarios(tmp_path / "scenarios.json", bundled_case.substations)
    assert sum(sc.probability for sc in sset) == pytest.approx(1.0, abs=1e-9)


def test_scenarios_bad_source_prefix(run_cli):
    code, out, err = run_cli(["scenarios", "--scenarios", "weird:abc"])
    assert code == 2
    assert "unrecognized scenario source" in err


# ----------------------------------------------------------------------
# plan
# ----------------------------------------------------------------------
def test_plan_writes_artifacts(tmp_path, run_cli, small_case_file):
    out_dir = tmp_path / "run"
    code, out, err = run_cli(
        [
            "plan",
            "--case",
            str(small_case_file),
            "--scenarios",
            "top:2",
            "--out",
            str(out_dir),
        ]
    )
    assert code == 0, err
    assert "protected substations:" in out
    assert "expected cost:" in out
    assert "solver: optimal" in out
    plan = json.loads((out_dir / "plan.json").read_text())
    assert plan["status"] == "optimal"
    assert plan["gap"] <= 1e-6
    assert plan["protected"] == sorted(plan["protected"])
    assert set(plan["schedule"]) == {"team_1", "team_2"}
    assert plan["scenario_source"].startswith("top 2")
    report = json.loads((out_dir / "report.json").read_text())
    assert report["expected_cost"]["total"] == pytest.approx(
        plan["objective"], rel=1e-9
    )
    csv_text = (out_dir / "curve.csv").read_text()
    assert csv_text.splitlines()[0] == "scenario_id,hour,demand_mw,served_mw"


def test_plan_infeasible_names_family(tmp_path, run_cli):
    code, out, err = run_cli(["plan", "--teams", "0", "--out", str(tmp_path)])
    assert code == 4
    assert "model infeasible" in err
    assert "gen_lb" in err


def test_plan_no_crews_without_must_run(tmp_path, run_cli, small_case_file):
    out_dir = tmp_path / "nocrew"
    code, out, err = run_cli(
        [
            "plan",
            "--case",
            str(small_case_file),
            "--teams",
            "0",
            "--scenarios",
            "top:2",
            "--out",
            str(out_dir),
        ]
    )
    assert code == 0, err
    assert "protected substations: (none)" in out
    plan = json.loads((out_dir / "plan.json").read_text())
    assert plan["protected"] == []


def test_plan_is_byte_deterministic(tmp_path, run_cli, small_case_file):
    outputs = []
    for tag in ("a", "b"):
        out_dir = tmp_path / tag
        code, _, _ = run_cli(
            [
                "plan",
                "--case",
                str(small_case_file),
                "--scenarios",
                "top:2",
                "--out",
                str(out_dir),
            ]
        )
        assert code == 0
        outputs.append(
            {
                name: (out_dir / name).read_bytes()
                for name in ("plan.json", "report.json", "curve.csv")
            }
        )
    assert outputs[0] == outputs[1]


def test_plan_node_limit_keeps_incumbent(tmp_path, run_cli):
    out_dir = tmp_path / "limited"
    code, out, err = run_cli(
        ["plan", "--node-limit", "0", "--out", str(out_dir)]
    )
    assert code == 3
    assert "node limit reached" in err
    plan = json.loads((out_dir / "plan.json").read_text())
    assert plan["status"] == "node_limit"
    assert plan["protected"]  # the warm-start incumbent is a real plan
    assert math.isinf(plan["gap"]) or plan["gap"] > 1e-6
    assert (out_dir / "report.json").exists()
    assert (out_dir / "curve.csv").exists()


# ----------------------------------------------------------------------
# compare / baseline
# ----------------------------------------------------------------------
def test_compare_baseline_only(tmp_path, run_cli, small_case_file):
    out_dir = tmp_path / "base"
    code, out, err = run_cli(
        [
            "compare",
            "--baseline-only",
            "--case",
            str(small_case_file),
            "--scenarios",
            "top:2",
            "--out",
            str(out_dir),
        ]
    )
    assert code == 0, err
    assert "baseline protected substations:" in out
    for name in ("baseline.json", "baseline_report.json", "baseline_curve.csv"):
        assert (out_dir / name).exists()
    assert not (out_dir / "plan.json").exists()
    assert not (out_dir / "compare.json").exists()


def test_compare_full_run(tmp_path, run_cli, small_case_file):
    out_dir = tmp_path / "cmp"
    code, out, err = run_cli(
        [
            "compare",
            "--case",
            str(small_case_file),
            "--scenarios",
            "top:2",
            "--out",
            str(out_dir),
        ]
    )
    assert code == 0, err
    assert "expected cost: stochastic" in out
    cmp_doc = json.loads((out_dir / "compare.json").read_text())
    assert cmp_doc["plan_a"]["label"] == "stochastic"
    assert cmp_doc["plan_b"]["label"] == "deterministic"
    assert cmp_doc["expected_cost"]["delta"] <= 1e-9
    for name in ("baseline.json", "plan.json", "compare.json"):
        assert (out_dir / name).exists()


# ----------------------------------------------------------------------
# config and overrides
# ----------------------------------------------------------------------
def test_config_defaults_and_flag_priority(tmp_path, run_cli):
    cfg = tmp_path / "run.toml"
    cfg.write_text(f'horizon = 3\nout = "{tmp_path / "cfg_out"}"\n')
    code, out, _ = run_cli(["validate", "--config", str(cfg)])
    assert code == 0
    assert "3 h horizon" in out

    code, out, _ = run_cli(["validate", "--config", str(cfg), "--horizon", "2"])
    assert code == 0
    assert "2 h horizon" in out

    code, out, _ = run_cli(["scenarios", "--config", str(cfg)])
    assert code == 0
    assert (tmp_path / "cfg_out" / "scenarios.json").exists()


def test_config_rejects_bad_toml(tmp_path, run_cli):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("horizon = [unclosed\n")
    code, out, err = run_cli(["scenarios", "--config", str(cfg)])
    assert code == 2
    assert "not valid TOML" in err


@pytest.mark.parametrize(
    "value, fragment",
    [("k1=abc", "bad number"), ("k99=5", "unknown substation")],
)
def test_dam_cost_rejects_bad_values(run_cli, value, fragment):
    code, out, err = run_cli(["validate", "--dam-cost", value])
    assert code == 2
    assert fragment in err


# ----------------------------------------------------------------------
# export-mps
# ----------------------------------------------------------------------
def test_export_mps_writes_model_and_glossary(tmp_path, run_cli):
    code, out, err = run_cli(
        ["export-mps", "--horizon", "2", "--out", str(tmp_path)]
    )
    assert code == 0, err
    assert "wrote" in out and "model.mps" in out
    names = json.loads((tmp_path / "model_names.json").read_text())
    parsed = mps.read_mps(tmp_path / "model.mps")
    assert parsed.num_vars == len(names["columns"])
    assert len(parsed.constraints) == len(names["rows"])
    # the file uses generated short names; the glossary maps them back
    assert sorted(names["columns"]) == sorted(v.name for v in parsed.catalog)
