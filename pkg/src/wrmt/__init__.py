"""Win ratio with multiple thresholds for composite time-to-event endpoints."""

from .core import Cohort, CohortError, Subject, SURVIVAL, validate_cohort
from .kernel import (
    INF,
    ScheduleError,
    ScoreMatrix,
    Stage,
    ThresholdSchedule,
    WinLossOutcome,
    compare_event,
    compare_survival,
    score_matrix,
    standard_schedule,
    win_loss_score,
)
from .thresholds import (
    AdaptiveBuilder,
    AdaptiveConfig,
    DegenerateEndpointError,
    PooledDifferences,
    adaptive_schedule,
    empirical_quantile,
    general_schedule,
    pooled_differences,
)
from .inference import (
    StratifiedResult,
    TestResult,
    analyze,
    fs_test,
    stratified_analysis,
    win_ratio,
)
from .decomposition import StageSummary, decompose, endpoint_rollup

from .simulation import SCENARIOS, ScenarioConfig, run_study, scenario, simulate_cohort

__version__ = "0.1.0"

__all__ = [
    "Cohort", "CohortError", "Subject", "SURVIVAL", "validate_cohort",
    "INF", "ScheduleError", "ScoreMatrix", "Stage", "ThresholdSchedule", "WinLossOutcome",
    "compare_event", "compare_survival", "score_matrix", "standard_schedule", "win_loss_score",
    "AdaptiveBuilder", "AdaptiveConfig", "DegenerateEndpointError", "PooledDifferences",
    "adaptive_schedule", "empirical_quantile", "general_schedule", "pooled_differences",
    "StratifiedResult", "TestResult", "analyze", "fs_test", "stratified_analysis", "win_ratio",
    "StageSummary", "decompose", "endpoint_rollup",
    "SCENARIOS", "ScenarioConfig", "run_study", "scenario", "simulate_cohort",
]
