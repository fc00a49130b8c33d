"""Day-ahead planning of temporary flood barriers for transmission
substations: pick which substations to protect, schedule the crews that
install the barriers, and price the plan against probabilistic flood
scenarios with an embedded DC-optimal-power-flow MILP and solver.
"""

from .evaluate import (
    OutageMetrics,
    Plan,
    PlanReport,
    ResilienceCurve,
    build_plan_report,
    compare_plans,
    deterministic_baseline,
    enumerate_plan_costs,
    optimize_case,
    outage_metrics,
    recovery_simulation,
    resilience_curves,
    schedule_for,
    sensitivity_note,
)
from .milp import (
    MilpInstance,
    Solution,
    build,
    crew_feasibility_instance,
    extract_solution,
    plan_assignment,
)
from .model import (
    Bus,
    CaseModel,
    CostConfig,
    CrewConfig,
    Generator,
    Line,
    Substation,
    bundled_case_path,
    bundled_scenarios_path,
    case_from_dict,
    case_to_dict,
    load_case,
    protection_time,
    save_case,
    validate_case,
)
from .mps import read_mps, write_mps
from .scenarios import (
    FailureScenario,
    ScenarioSet,
    enumerate_all,
    load_scenarios,
    nested_severity_reduction,
    save_scenarios,
    top_n_reduction,
)
from .solver import (
    CheckResult,
    LpResult,
    MipResult,
    solve_lp,
    solve_mip,
    verify_point,
    warm_start_check,
)

__version__ = "0.1.0"

__all__ = [
    "Bus",
    "CaseModel",
    "CheckResult",
    "CostConfig",
    "CrewConfig",
    "FailureScenario",
    "Generator",
    "Line",
    "LpResult",
    "MilpInstance",
    "MipResult",
    "OutageMetrics",
    "Plan",
    "PlanReport",
    "ResilienceCurve",
    "ScenarioSet",
    "Solution",
    "Substation",
    "build",
    "build_plan_report",
    "bundled_case_path",
    "bundled_scenarios_path",
    "case_from_dict",
    "case_to_dict",
    "compare_plans",
    "crew_feasibility_instance",
    "deterministic_baseline",
    "enumerate_all",
    "enumerate_plan_costs",
    "extract_solution",
    "load_case",
    "load_scenarios",
    "nested_severity_reduction",
    "optimize_case",
    "outage_metrics",
    "plan_assignment",
    "protection_time",
    "read_mps",
    "recovery_simulation",
    "resilience_curves",
    "save_case",
    "save_scenarios",
    "schedule_for",
    "sensitivity_note",
    "solve_lp",
    "solve_mip",
    "top_n_reduction",
    "validate_case",
    "verify_point",
    "warm_start_check",
    "write_mps",
]
