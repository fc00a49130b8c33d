"""Command-line surface: validate cases, generate scenario sets, compute
protection plans, run the deterministic baseline, compare plans, and
export the planning model as an MPS file.

Every command is deterministic: the same inputs produce byte-identical
JSON/CSV artifacts (two-space indented JSON with sorted keys, numbers in
shortest round-trip form).

Exit codes: 0 success, 2 validation problem, 3 resource limit reached,
4 infeasible model, 1 unexpected error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import warnings as _warnings
from dataclasses import dataclass
from pathlib import Path

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from . import evaluate, model, mps, scenarios as scen
from .milp import build

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_RESOURCE_LIMIT = 3
EXIT_INFEASIBLE = 4


class CliError(Exception):
    """Error with a process exit code attached."""

    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    """Merged view of config file and command-line flags (flags win)."""

    case_path: Path
    scenario_source: str | None
    gap: float
    node_limit: int | None
    out_dir: Path
    seed: int | None  # reserved; the default pipeline is deterministic


# ----------------------------------------------------------------------
# option merging (TOML config file, overridden by explicit flags)
# ----------------------------------------------------------------------
def _read_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        with open(p, "rb") as fh:
            return tomllib.load(fh)
    except OSError as e:
        raise CliError(EXIT_VALIDATION, f"cannot read config {p}: {e}")
    except tomllib.TOMLDecodeError as e:
        raise CliError(EXIT_VALIDATION, f"config {p} is not valid TOML: {e}")


def _merged(args: argparse.Namespace, cfg: dict, key: str, default=None):
    val = getattr(args, key, None)
    if val is not None:
        return val
    if key in cfg:
        return cfg[key]
    return default


def _dam_cost_overrides(raw, case: model.CaseModel) -> dict[str, float]:
    """Parse --dam-cost entries: 'SUBSTATION=COST' or a bare 'COST'
    applied to every substation."""
    if raw is None:
        return {}
    if not isinstance(raw, (list, tuple)):
        raw = [raw]
    known = {s.id for s in case.substations}
    out: dict[str, float] = {}
    for item in raw:
        text = str(item)
        if "=" in text:
            sid, _, val = text.partition("=")
            sid = sid.strip()
            if sid not in known:
                raise CliError(
                    EXIT_VALIDATION,
                    f"--dam-cost names unknown substation {sid!r} "
                    f"(known: {', '.join(sorted(known))})",
                )
            try:
                out[sid] = float(val)
            except ValueError:
                raise CliError(EXIT_VALIDATION, f"--dam-cost {text!r}: bad number")
        else:
            try:
                value = float(text)
            except ValueError:
                raise CliError(EXIT_VALIDATION, f"--dam-cost {text!r}: bad number")
            for sid in known:
                out[sid] = value
    return out


def _apply_overrides(case: model.CaseModel, args, cfg) -> model.CaseModel:
    horizon = _merged(args, cfg, "horizon")
    if horizon is not None:
        horizon = int(horizon)
        if horizon < 1:
            raise CliError(EXIT_VALIDATION, "--horizon must be >= 1")
        buses = [
            dataclasses.replace(
                b,
                demand_profile=tuple(
                    b.demand_profile[t % len(b.demand_profile)]
                    for t in range(horizon)
                ),
            )
            for b in case.buses
        ]
        case = dataclasses.replace(case, buses=buses, operating_horizon=horizon)

    crew_kw = {}
    for flag, field in (
        ("teams", "num_teams"),
        ("members", "members_per_team"),
        ("prep_hours", "prep_hours"),
    ):
        val = _merged(args, cfg, flag)
        if val is not None:
            crew_kw[field] = int(val)
    if crew_kw:
        case = dataclasses.replace(
            case, crew=dataclasses.replace(case.crew, **crew_kw)
        )

    voll = _merged(args, cfg, "voll")
    if voll is not None:
        case = dataclasses.replace(
            case, costs=dataclasses.replace(case.costs, voll=float(voll))
        )

    dams = _dam_cost_overrides(_merged(args, cfg, "dam_cost"), case)
    if dams:
        subs = [
            dataclasses.replace(s, tiger_dam_cost=dams.get(s.id, s.tiger_dam_cost))
            for s in case.substations
        ]
        case = dataclasses.replace(case, substations=subs)
    return case


def _load_case(args, cfg) -> tuple[model.CaseModel, Path]:
    case_path = Path(_merged(args, cfg, "case", model.bundled_case_path()))
    try:
        case = model.load_case(case_path)
    except OSError as e:
        raise CliError(EXIT_VALIDATION, f"cannot read case {case_path}: {e}")
    except (ValueError, json.JSONDecodeError) as e:
        raise CliError(EXIT_VALIDATION, f"case {case_path}: {e}")
    case = _apply_overrides(case, args, cfg)
    issues = model.validate_case(case)
    if issues:
        listing = "\n".join(f"  - {msg}" for msg in issues)
        raise CliError(
            EXIT_VALIDATION, f"case {case_path} failed validation:\n{listing}"
        )
    return case, case_path


def _resolve_scenarios(
    case: model.CaseModel, case_path: Path, source: str | None
) -> tuple[scen.ScenarioSet, str, list[str]]:
    """Scenario set, a human-readable source description, and warnings."""
    notes: list[str] = []
    if source is None:
        sibling = case_path.with_name(case_path.stem + ".scenarios.json")
        if sibling.exists():
            source = f"file:{sibling}"
        else:
            try:
                sset = scen.enumerate_all(case.substations)
            except ValueError as e:
                raise CliError(
                    EXIT_VALIDATION,
                    f"no scenario file next to {case_path} and exhaustive "
                    f"enumeration is unavailable ({e}); pass --scenarios",
                )
            return sset, "enumerated all failure combinations", notes
    if source.startswith("file:"):
        path = Path(source[len("file:") :])
        try:
            with _warnings.catch_warnings(record=True) as caught:
                _warnings.simplefilter("always")
                sset = scen.load_scenarios(path, case.substations)
            notes.extend(str(w.message) for w in caught)
        except OSError as e:
            raise CliError(EXIT_VALIDATION, f"cannot read scenarios {path}: {e}")
        except (ValueError, json.JSONDecodeError) as e:
            raise CliError(EXIT_VALIDATION, f"scenarios {path}: {e}")
        return sset, f"file {path}", notes
    if source.startswith("nested:"):
        try:
            thresholds = [float(x) for x in source[len("nested:") :].split(",")]
            sset = scen.nested_severity_reduction(case.substations, thresholds)
        except ValueError as e:
            raise CliError(EXIT_VALIDATION, f"--scenarios {source!r}: {e}")
        return sset, f"nested depth thresholds {thresholds}", notes
    if source.startswith("top:"):
        try:
            n = int(source[len("top:") :])
            sset = scen.top_n_reduction(case.substations, n)
        except ValueError as e:
            raise CliError(EXIT_VALIDATION, f"--scenarios {source!r}: {e}")
        return sset, f"top {n} most likely failure combinations", notes
    raise CliError(
        EXIT_VALIDATION,
        f"unrecognized scenario source {source!r} "
        "(expected file:PATH, nested:d1,d2,..., or top:N)",
    )


def _run_config(args, cfg, case_path: Path) -> RunConfig:
    gap = float(_merged(args, cfg, "gap", 1e-6))
    if gap < 0:
        raise CliError(EXIT_VALIDATION, "--gap must be >= 0")
    node_limit = _merged(args, cfg, "node_limit")
    out_dir = Path(_merged(args, cfg, "out", "."))
    seed = _merged(args, cfg, "seed")
    return RunConfig(
        case_path=case_path,
        scenario_source=_merged(args, cfg, "scenarios"),
        gap=gap,
        node_limit=None if node_limit is None else int(node_limit),
        out_dir=out_dir,
        seed=None if seed is None else int(seed),
    )


# ----------------------------------------------------------------------
# artifact writers
# ----------------------------------------------------------------------
def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _plan_summary(plan: evaluate.Plan, result, source: str) -> dict:
    return {
        "label": plan.label,
        "protected": sorted(plan.protected),
        "schedule": {
            f"team_{n + 1}": [site if site is not None else "" for site in track]
            for n, track in enumerate(plan.schedule)
        },
        "objective": result.objective,
        "bound": result.bound,
        "gap": result.gap,
        "status": result.status,
        "nodes": result.nodes,
        "lp_iterations": result.lp_iterations,
        "scenario_source": source,
    }


def _solve_stochastic(case, sset, run: RunConfig):
    """Solve the planning model; map solver status to (plan, result,
    instance, exit_code)."""
    solution, result, instance = evaluate.optimize_case(
        case, sset, gap_tol=run.gap, node_limit=run.node_limit
    )
    if result.status == "infeasible":
        families = evaluate.diagnose_infeasibility(case, sset, instance)
        tag = ", ".join(families) if families else "unknown"
        raise CliError(
            EXIT_INFEASIBLE, f"model infeasible; violated constraint families: {tag}"
        )
    if result.status in ("unbounded", "numerical"):
        raise CliError(EXIT_UNEXPECTED, f"solver failed with status {result.status}")
    code = EXIT_OK
    if result.status == "node_limit":
        if solution is None:
            raise CliError(
                EXIT_RESOURCE_LIMIT,
                f"node limit {run.node_limit} reached before any feasible plan",
            )
        code = EXIT_RESOURCE_LIMIT
        print(
            f"note: node limit reached; best plan has gap {result.gap:.3g}",
            file=sys.stderr,
        )
    plan = evaluate.plan_from_solution(solution, label="stochastic")
    return plan, result, instance, code


def _maybe_sensitivity(case, sset, warnings_out: list[str]):
    flat = all(len(set(b.demand_profile)) <= 1 for b in case.buses)
    if not flat or len(case.substations) > 12:
        warnings_out.append(
            "sensitivity scan skipped (needs flat demand profiles and at most 12 substations)"
        )
        return None
    return evaluate.sensitivity_note(case, sset)


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------
def cmd_validate(args) -> int:
    cfg = _read_config(args.config)
    case_path = Path(_merged(args, cfg, "case", model.bundled_case_path()))
    try:
        case = model.load_case(case_path)
    except OSError as e:
        print(f"error: cannot read case {case_path}: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, json.JSONDecodeError) as e:
        print(f"error: case {case_path}: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    case = _apply_overrides(case, args, cfg)
    issues = model.validate_case(case)
    if issues:
        for msg in issues:
            print(msg)
        print(f"{len(issues)} problem(s) found in {case_path}")
        return EXIT_VALIDATION
    print(
        f"{case_path}: ok "
        f"({len(case.buses)} buses, {len(case.lines)} lines, "
        f"{len(case.generators)} generators, {len(case.substations)} substations, "
        f"{case.operating_horizon} h horizon)"
    )
    return EXIT_OK


def cmd_scenarios(args) -> int:
    cfg = _read_config(args.config)
    case, case_path = _load_case(args, cfg)
    run = _run_config(args, cfg, case_path)
    sset, source, notes = _resolve_scenarios(case, case_path, run.scenario_source)
    for note in notes:
        print(f"warning: {note}", file=sys.stderr)
    out = run.out_dir / "scenarios.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    scen.save_scenarios(sset, out)
    print(f"scenario source: {source}")
    print(f"{'id':<12} {'probability':>12}  failed substations")
    for sc in sset:
        failed = ", ".join(sorted(sc.failed)) or "(none)"
        print(f"{sc.id:<12} {sc.probability:>12.6f}  {failed}")
    print(f"{'total':<12} {sum(sc.probability for sc in sset):>12.6f}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_plan(args) -> int:
    cfg = _read_config(args.config)
    case, case_path = _load_case(args, cfg)
    run = _run_config(args, cfg, case_path)
    sset, source, notes = _resolve_scenarios(case, case_path, run.scenario_source)
    plan, result, instance, code = _solve_stochastic(case, sset, run)

    warnings_out = list(notes)
    sensitivity = _maybe_sensitivity(case, sset, warnings_out)
    report = evaluate.build_plan_report(
        case,
        sset,
        plan,
        instance=instance,
        solver_status=result.status,
        objective=result.objective,
        gap=result.gap,
        sensitivity=sensitivity,
        warnings=warnings_out,
    )
    _write_json(run.out_dir / "plan.json", _plan_summary(plan, result, source))
    _write_text(run.out_dir / "report.json", report.to_json())
    _write_text(run.out_dir / "curve.csv", evaluate.curve_to_csv(report.curve))

    print(f"protected substations: {', '.join(sorted(plan.protected)) or '(none)'}")
    print(f"expected cost: {report.expected_total_cost:.2f}")
    print(f"solver: {result.status}, gap {result.gap:.3g}, {result.nodes} nodes")
    for name in ("plan.json", "report.json", "curve.csv"):
        print(f"wrote {run.out_dir / name}")
    return code


def cmd_baseline(args) -> int:
    cfg = _read_config(args.config)
    case, case_path = _load_case(args, cfg)
    run = _run_config(args, cfg, case_path)
    sset, source, notes = _resolve_scenarios(case, case_path, run.scenario_source)
    code, _ = _write_baseline_artifacts(case, sset, source, notes, run)
    return code


def _write_baseline_artifacts(
    case, sset, source, notes, run: RunConfig
) -> tuple[int, evaluate.Plan]:
    try:
        plan, solution, result = evaluate.deterministic_baseline(
            case, gap_tol=run.gap, node_limit=run.node_limit
        )
    except RuntimeError as e:
        raise CliError(EXIT_INFEASIBLE, str(e))
    code = EXIT_OK
    if result.status == "node_limit":
        code = EXIT_RESOURCE_LIMIT
        print(
            f"note: node limit reached; baseline gap {result.gap:.3g}",
            file=sys.stderr,
        )
    report = evaluate.build_plan_report(
        case,
        sset,
        plan,
        solver_status=result.status,
        objective=result.objective,
        gap=result.gap,
        warnings=list(notes),
    )
    _write_json(run.out_dir / "baseline.json", _plan_summary(plan, result, source))
    _write_text(run.out_dir / "baseline_report.json", report.to_json())
    _write_text(
        run.out_dir / "baseline_curve.csv", evaluate.curve_to_csv(report.curve)
    )
    print(
        f"baseline protected substations: "
        f"{', '.join(sorted(plan.protected)) or '(none)'}"
    )
    print(f"baseline expected cost on scenario set: {report.expected_total_cost:.2f}")
    for name in ("baseline.json", "baseline_report.json", "baseline_curve.csv"):
        print(f"wrote {run.out_dir / name}")
    return code, plan


def cmd_compare(args) -> int:
    cfg = _read_config(args.config)
    case, case_path = _load_case(args, cfg)
    run = _run_config(args, cfg, case_path)
    sset, source, notes = _resolve_scenarios(case, case_path, run.scenario_source)

    base_code, base_plan = _write_baseline_artifacts(case, sset, source, notes, run)
    if args.baseline_only:
        return base_code

    plan, result, instance, plan_code = _solve_stochastic(case, sset, run)
    _write_json(run.out_dir / "plan.json", _plan_summary(plan, result, source))

    comparison = evaluate.compare_plans(case, sset, plan, base_plan)
    comparison["scenario_source"] = source
    comparison["warnings"] = list(notes)
    _write_json(run.out_dir / "compare.json", comparison)

    cost = comparison["expected_cost"]
    print(
        f"expected cost: stochastic {cost['a']:.2f} vs baseline {cost['b']:.2f} "
        f"(delta {cost['delta']:+.2f})"
    )
    print(f"wrote {run.out_dir / 'compare.json'}")
    return max(base_code, plan_code)


def cmd_export_mps(args) -> int:
    cfg = _read_config(args.config)
    case, case_path = _load_case(args, cfg)
    run = _run_config(args, cfg, case_path)
    sset, source, notes = _resolve_scenarios(case, case_path, run.scenario_source)
    for note in notes:
        print(f"warning: {note}", file=sys.stderr)
    instance = build(case, sset)
    out = run.out_dir / "model.mps"
    out.parent.mkdir(parents=True, exist_ok=True)
    mapping = mps.write_mps(instance, out)
    _write_json(run.out_dir / "model_names.json", mapping)
    print(
        f"wrote {out} ({len(mapping['rows'])} rows, "
        f"{len(mapping['columns'])} columns; scenario source: {source})"
    )
    print(f"wrote {run.out_dir / 'model_names.json'} (generated-name glossary)")
    return EXIT_OK


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------
def _add_common(p: argparse.ArgumentParser, *, solver: bool) -> None:
    p.add_argument("--case", help="case JSON file (default: bundled six-bus case)")
    p.add_argument(
        "--scenarios",
        help=(
            "scenario source: file:PATH, nested:d1,d2,... (depth thresholds), "
            "or top:N; default: CASE.scenarios.json next to the case, else "
            "exhaustive enumeration"
        ),
    )
    p.add_argument("--horizon", type=int, help="override operating horizon (hours)")
    p.add_argument("--teams", type=int, help="override number of crew teams")
    p.add_argument("--members", type=int, help="override members per crew team")
    p.add_argument(
        "--prep-hours",
        type=int,
        dest="prep_hours",
        help="override preparation window length (hours)",
    )
    p.add_argument("--voll", type=float, help="override value of lost load ($/MWh)")
    p.add_argument(
        "--dam-cost",
        action="append",
        dest="dam_cost",
        metavar="[SUB=]COST",
        help="override tiger-dam cost, per substation (k1=5e6) or for all (5e6); repeatable",
    )
    p.add_argument("--out", help="output directory for artifacts (default: .)")
    p.add_argument("--config", help="TOML config file; explicit flags win")
    p.add_argument("--seed", type=int, help="reserved; default pipeline is deterministic")
    if solver:
        p.add_argument("--gap", type=float, help="relative optimality gap (default 1e-6)")
        p.add_argument(
            "--node-limit",
            type=int,
            dest="node_limit",
            help="stop branch and bound after this many nodes",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floodplan",
        description=(
            "Day-ahead substation flood-protection planning: choose which "
            "substations to dam, schedule the crews, and price the plan "
            "against failure scenarios."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a case file and report problems")
    _add_common(p, solver=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("scenarios", help="generate or echo a scenario set")
    _add_common(p, solver=False)
    p.set_defaults(func=cmd_scenarios)

    p = sub.add_parser("plan", help="solve the stochastic planning model")
    _add_common(p, solver=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser(
        "baseline", help="plan as if every substation certainly floods"
    )
    _add_common(p, solver=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser(
        "compare", help="stochastic plan vs deterministic baseline, with deltas"
    )
    _add_common(p, solver=True)
    p.add_argument(
        "--baseline-only",
        action="store_true",
        help="write only the baseline artifacts",
    )
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("export-mps", help="write the planning model as an MPS file")
    _add_common(p, solver=False)
    p.set_defaults(func=cmd_export_mps)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except Exception as e:  # pragma: no cover - defensive
        print(f"unexpected error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
