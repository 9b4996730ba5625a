"""Target-tracking benchmark for parameter adaptation methods in differential evolution."""
from .analysis import (
    CellKey,
    ComparisonVerdict,
    ExperimentSummary,
    ParamLog,
    RunRecord,
    SuccessProfile,
    aggregate,
    compare,
    smoothed_success_trajectory,
    success_prob_vs_distance,
    summarize,
)
from .benchmarks import BENCHMARKS, evaluate_benchmark
from .config import DePlan, ExperimentPlan, PlanError, dump_plan, load_plan, parse_plan
from .de import Crossover, DeConfig, DeTrace, Mutation, run_adaptive_de
from .experiment import report, run_experiment, run_validation
from .pam import (
    AdaptationMode,
    ConfigurationError,
    PamHyper,
    PamKind,
    PamState,
    init_state,
    lehmer_mean,
    power_mean,
    sample,
    update,
)
from .simulation import LogLevel, RunResult, SimConfig, simulate_run
from .targets import TargetFamily, TargetSpec, eval_target, trajectory

__version__ = "0.1.0"
